//! The gradient-compensation solver, the exact-gradient baseline, trace
//! bookkeeping, and rate diagnostics.

mod diagnostics;
mod gc;
mod trace;

pub use diagnostics::{bounded_direction_constants, nmin_bound, progress_per_eval, prop2_bound, RateDiagnostics};
pub use gc::{
    gc_solve, model_based_descent, model_free_solve, EpisodeTrace, ExitReason, GcConfig, ModelBasedExit, Termination,
};
pub use trace::{ConvergenceTrace, Event, Regime, StepRecord, StopReason, TraceRecord};
