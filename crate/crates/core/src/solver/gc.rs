use super::trace::{ConvergenceTrace, Event, Recorder, Regime, StepRecord, StopReason};
use crate::composite::{compensate, CompensationState, CompositeObjective};
use crate::error::{Error, Result};
use crate::linesearch::{bt_line_search, LineSearchOutcome, LineSearchParams};
use crate::matlin::{distance, norm};

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    /// Stop once `‖x − reference‖ < tol`, checked after every accepted step.
    DistanceToReference(Vec<f64>),
    /// Stop once a measured exact gradient has norm `≤ tol`.
    GradientNorm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcConfig {
    pub gamma: f64,
    /// Lipschitz constant of `∇r`.
    pub lipschitz: f64,
    pub ls_model_based: LineSearchParams,
    pub ls_model_free: LineSearchParams,
    pub max_outer_iters: usize,
    pub termination_tol: f64,
    pub termination: Termination,
    /// Keep a [`StepRecord`] for every accepted step.
    pub record_steps: bool,
}

impl GcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(self.lipschitz >= 0.0) {
            return Err(Error::InvalidParameter(format!("L_r must be non-negative, got {}", self.lipschitz)));
        }
        self.ls_model_based.validate()?;
        self.ls_model_free.validate()?;
        if !(self.ls_model_based.eta_min > 0.0) {
            return Err(Error::InvalidParameter("model-based line search needs eta_min > 0".into()));
        }
        if !(self.termination_tol > 0.0) {
            return Err(Error::InvalidParameter("termination tolerance must be positive".into()));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidParameter("max_outer_iters must be positive".into()));
        }
        Ok(())
    }

    fn reference(&self) -> Option<Vec<f64>> {
        match &self.termination {
            Termination::DistanceToReference(r) => Some(r.clone()),
            Termination::GradientNorm => None,
        }
    }

    fn distance_met(&self, x: &[f64]) -> bool {
        match &self.termination {
            Termination::DistanceToReference(r) => distance(r, x) < self.termination_tol,
            Termination::GradientNorm => false,
        }
    }

    fn gradient_met(&self, g: &[f64]) -> bool {
        matches!(self.termination, Termination::GradientNorm) && norm(g) <= self.termination_tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitReason {
    MonitorViolated,
    LineSearchFailed,
    GtildeZero,
    /// The distance termination test passed inside the episode.
    Converged,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelBasedExit {
    pub x: Vec<f64>,
    pub f_x: f64,
    pub reason: ExitReason,
    pub steps: usize,
}

/// Handle passed to [`model_based_descent`] when called on its own.
pub struct EpisodeTrace {
    recorder: Recorder,
}

impl EpisodeTrace {
    pub fn new(reference: Option<Vec<f64>>, x0: &[f64]) -> Self {
        Self {
            recorder: Recorder::new(reference, true, x0),
        }
    }

    pub fn records(&self) -> &[super::TraceRecord] {
        &self.recorder.records
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.recorder.steps
    }
}

fn log_trials(rec: &mut Recorder, evals_before: u64, ls: &LineSearchOutcome, regime: Regime) {
    for (k, t) in ls.trials.iter().enumerate() {
        rec.push(evals_before + k as u64 + 1, t.value, regime, Event::ArmijoTest);
    }
}

/// Repeats monitored steps along `g̃ = ∇f̂ + δ` from `x` until the monitor
/// fails, the floored line search fails, or `g̃` vanishes. The monitor is
/// checked before the line search. `state.ebar` enters as the episode's seed
/// and leaves as the bound at the exit point.
pub fn model_based_descent<O: CompositeObjective + ?Sized>(
    obj: &mut O,
    x: &[f64],
    f_x: f64,
    state: &mut CompensationState,
    config: &GcConfig,
    trace: &mut EpisodeTrace,
) -> Result<ModelBasedExit> {
    run_model_based(obj, x.to_vec(), f_x, state, config, &mut trace.recorder)
}

fn run_model_based<O: CompositeObjective + ?Sized>(
    obj: &mut O,
    mut x: Vec<f64>,
    mut f_x: f64,
    state: &mut CompensationState,
    config: &GcConfig,
    rec: &mut Recorder,
) -> Result<ModelBasedExit> {
    let mut steps = 0;
    loop {
        let gtilde = state.compensated_gradient(obj, &x)?;
        if gtilde.iter().all(|g| *g == 0.0) {
            return Ok(ModelBasedExit {
                x,
                f_x,
                reason: ExitReason::GtildeZero,
                steps,
            });
        }
        if !state.monitor_ok(&gtilde) {
            return Ok(ModelBasedExit {
                x,
                f_x,
                reason: ExitReason::MonitorViolated,
                steps,
            });
        }
        let before = obj.evaluations();
        let ls = bt_line_search(obj, &x, f_x, &gtilde, &config.ls_model_based)?;
        log_trials(rec, before, &ls, Regime::ModelBased);
        if ls.failed() {
            rec.push(obj.evaluations(), f_x, Regime::ModelBased, Event::LineSearchFail);
            return Ok(ModelBasedExit {
                x,
                f_x,
                reason: ExitReason::LineSearchFailed,
                steps,
            });
        }
        let ebar_before = state.ebar;
        state.advance(&x, &ls.accepted_point);
        let step = StepRecord {
            regime: Regime::ModelBased,
            eta: ls.eta,
            x_before: x,
            x_after: ls.accepted_point,
            f_before: f_x,
            f_after: ls.f_at_accepted,
            direction: gtilde,
            ebar: ebar_before,
            delta: state.delta.clone(),
        };
        x = step.x_after.clone();
        f_x = step.f_after;
        rec.accept(obj.evaluations(), step);
        steps += 1;
        if config.distance_met(&x) {
            return Ok(ModelBasedExit {
                x,
                f_x,
                reason: ExitReason::Converged,
                steps,
            });
        }
    }
}

struct Finish<'a> {
    rec: Recorder,
    outer: usize,
    total: u64,
    x: &'a [f64],
    f_x: f64,
}

fn finish(done: Finish<'_>, stop: StopReason) -> ConvergenceTrace {
    ConvergenceTrace {
        records: done.rec.records,
        steps: done.rec.steps,
        final_point: done.x.to_vec(),
        final_value: done.f_x,
        total_evals: done.total,
        converged: stop == StopReason::Converged,
        stop,
        outer_iterations: done.outer,
    }
}

/// One step along the exact gradient with the unfloored search. Returns
/// `None` when the search fails.
fn model_free_step<O: CompositeObjective + ?Sized>(
    obj: &mut O,
    x: &[f64],
    f_x: f64,
    grad: &[f64],
    config: &GcConfig,
    rec: &mut Recorder,
) -> Result<Option<(Vec<f64>, f64)>> {
    let before = obj.evaluations();
    let ls = bt_line_search(obj, x, f_x, grad, &config.ls_model_free)?;
    log_trials(rec, before, &ls, Regime::ModelFree);
    if ls.failed() {
        rec.push(obj.evaluations(), f_x, Regime::ModelFree, Event::LineSearchFail);
        return Ok(None);
    }
    let next = (ls.accepted_point.clone(), ls.f_at_accepted);
    rec.accept(
        obj.evaluations(),
        StepRecord {
            regime: Regime::ModelFree,
            eta: ls.eta,
            x_before: x.to_vec(),
            x_after: ls.accepted_point,
            f_before: f_x,
            f_after: ls.f_at_accepted,
            direction: grad.to_vec(),
            ebar: 0.0,
            delta: Vec::new(),
        },
    );
    Ok(Some(next))
}

/// Gradient compensation. Starting from `x0` (normally the model optimum),
/// each outer iteration runs a model-based episode, re-measures the
/// compensation at its exit point, then takes one exact-gradient step and seeds
/// `ē` with `L_r` times that step's length.
pub fn gc_solve<O: CompositeObjective + ?Sized>(obj: &mut O, x0: &[f64], config: &GcConfig) -> Result<ConvergenceTrace> {
    config.validate()?;
    let mut rec = Recorder::new(config.reference(), config.record_steps, x0);
    let mut x = x0.to_vec();
    let mut f_x = obj.value(&x)?;
    rec.push(obj.evaluations(), f_x, Regime::ModelFree, Event::Initial);
    macro_rules! done {
        ($outer:expr, $stop:expr) => {
            return Ok(finish(
                Finish {
                    rec,
                    outer: $outer,
                    total: obj.evaluations(),
                    x: &x,
                    f_x,
                },
                $stop,
            ))
        };
    }
    if config.distance_met(&x) {
        done!(0, StopReason::Converged);
    }

    let first = compensate(obj, &x, f_x)?;
    rec.push(obj.evaluations(), f_x, Regime::ModelFree, Event::ExactGradient);
    if config.gradient_met(&first.exact_gradient) {
        done!(0, StopReason::Converged);
    }
    // The gradient at the latest compensation point, kept so an episode that
    // takes no step does not pay for the same measurement twice.
    let mut measured = Some((x.clone(), first.exact_gradient));
    let mut state = CompensationState::new(first.delta, config.lipschitz, config.gamma)?;

    for outer in 1..=config.max_outer_iters {
        let exit = run_model_based(obj, x.clone(), f_x, &mut state, config, &mut rec)?;
        x = exit.x;
        f_x = exit.f_x;
        if exit.reason == ExitReason::Converged {
            done!(outer, StopReason::Converged);
        }

        let grad = match measured.take() {
            Some((at, g)) if at == x => g,
            _ => {
                let c = compensate(obj, &x, f_x)?;
                rec.push(obj.evaluations(), f_x, Regime::ModelFree, Event::ExactGradient);
                state.delta = c.delta;
                c.exact_gradient
            }
        };
        if config.gradient_met(&grad) {
            done!(outer, StopReason::Converged);
        }

        match model_free_step(obj, &x, f_x, &grad, config, &mut rec)? {
            None => done!(outer, StopReason::Stalled),
            Some((x_next, f_next)) => {
                state.ebar = config.lipschitz * distance(&x, &x_next);
                x = x_next;
                f_x = f_next;
            }
        }
        if config.distance_met(&x) {
            done!(outer, StopReason::Converged);
        }
    }
    done!(config.max_outer_iters, StopReason::MaxIters)
}

/// Plain gradient descent with exact gradients and the unfloored line search:
/// the model is used only through the starting point.
pub fn model_free_solve<O: CompositeObjective + ?Sized>(
    obj: &mut O,
    x0: &[f64],
    config: &GcConfig,
) -> Result<ConvergenceTrace> {
    config.ls_model_free.validate()?;
    if !(config.termination_tol > 0.0) {
        return Err(Error::InvalidParameter("termination tolerance must be positive".into()));
    }
    let mut rec = Recorder::new(config.reference(), config.record_steps, x0);
    let mut x = x0.to_vec();
    let mut f_x = obj.value(&x)?;
    rec.push(obj.evaluations(), f_x, Regime::ModelFree, Event::Initial);
    macro_rules! done {
        ($outer:expr, $stop:expr) => {
            return Ok(finish(
                Finish {
                    rec,
                    outer: $outer,
                    total: obj.evaluations(),
                    x: &x,
                    f_x,
                },
                $stop,
            ))
        };
    }
    if config.distance_met(&x) {
        done!(0, StopReason::Converged);
    }
    for outer in 1..=config.max_outer_iters {
        let grad = obj.exact_gradient(&x, f_x)?.gradient;
        rec.push(obj.evaluations(), f_x, Regime::ModelFree, Event::ExactGradient);
        if config.gradient_met(&grad) {
            done!(outer, StopReason::Converged);
        }
        match model_free_step(obj, &x, f_x, &grad, config, &mut rec)? {
            None => done!(outer, StopReason::Stalled),
            Some((x_next, f_next)) => {
                x = x_next;
                f_x = f_next;
            }
        }
        if config.distance_met(&x) {
            done!(outer, StopReason::Converged);
        }
    }
    done!(config.max_outer_iters, StopReason::MaxIters)
}
