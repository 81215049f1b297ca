use std::fmt;

use crate::matlin::distance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    ModelBased,
    ModelFree,
}

impl Regime {
    pub fn tag(self) -> &'static str {
        match self {
            Regime::ModelBased => "MB",
            Regime::ModelFree => "MF",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Event {
    /// Evaluation of the starting point.
    Initial,
    /// One Armijo test inside a line search; `f_value` is the trial value.
    ArmijoTest,
    /// A step was taken; `f_value` and `error` describe the new iterate.
    Accept,
    /// A line search returned failure; the iterate did not move.
    LineSearchFail,
    /// An exact-gradient measurement (compensation point in GC, plain
    /// gradient in the baseline). Its row advances `eval_index` by the
    /// gradient's cost.
    ExactGradient,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Event::Initial => "Initial",
            Event::ArmijoTest => "ArmijoTest",
            Event::Accept => "Accept",
            Event::LineSearchFail => "LineSearchFail",
            Event::ExactGradient => "ExactGradient",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Event {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "Initial" => Event::Initial,
            "ArmijoTest" => Event::ArmijoTest,
            "Accept" => Event::Accept,
            "LineSearchFail" => Event::LineSearchFail,
            "ExactGradient" => Event::ExactGradient,
            other => return Err(format!("unknown event {other:?}")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    /// Evaluation counter value right after the event.
    pub eval_index: u64,
    pub f_value: f64,
    /// Distance of the current iterate to the reference point (NaN without one).
    pub error: f64,
    pub regime: Regime,
    pub event: Event,
}

/// Detail kept for every accepted step when step recording is enabled.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub regime: Regime,
    pub eta: f64,
    pub x_before: Vec<f64>,
    pub x_after: Vec<f64>,
    pub f_before: f64,
    pub f_after: f64,
    /// Direction used for the step (`g̃` or `∇f`).
    pub direction: Vec<f64>,
    /// `ē` at `x_before`; zero for model-free steps.
    pub ebar: f64,
    /// Compensation in force; empty for model-free steps.
    pub delta: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIters,
    /// The unfloored line search along the exact gradient failed.
    Stalled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    pub steps: Vec<StepRecord>,
    pub final_point: Vec<f64>,
    pub final_value: f64,
    pub total_evals: u64,
    pub converged: bool,
    pub stop: StopReason,
    pub outer_iterations: usize,
}

impl ConvergenceTrace {
    pub fn accepts(&self, regime: Regime) -> usize {
        self.records
            .iter()
            .filter(|r| r.event == Event::Accept && r.regime == regime)
            .count()
    }

    pub fn model_based_steps(&self) -> usize {
        self.accepts(Regime::ModelBased)
    }

    pub fn model_free_steps(&self) -> usize {
        self.accepts(Regime::ModelFree)
    }

    pub fn final_error(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.error)
    }

    pub fn entered_model_based(&self) -> bool {
        self.model_based_steps() > 0
    }
}

/// Accumulates trace rows while a solver runs.
pub(crate) struct Recorder {
    reference: Option<Vec<f64>>,
    record_steps: bool,
    pub records: Vec<TraceRecord>,
    pub steps: Vec<StepRecord>,
    error: f64,
}

impl Recorder {
    pub fn new(reference: Option<Vec<f64>>, record_steps: bool, x0: &[f64]) -> Self {
        let error = reference.as_deref().map_or(f64::NAN, |r| distance(r, x0));
        Self {
            reference,
            record_steps,
            records: Vec::new(),
            steps: Vec::new(),
            error,
        }
    }

    pub fn push(&mut self, eval_index: u64, f_value: f64, regime: Regime, event: Event) {
        self.records.push(TraceRecord {
            eval_index,
            f_value,
            error: self.error,
            regime,
            event,
        });
    }

    /// Moves the iterate; the error column changes only here.
    pub fn accept(&mut self, eval_index: u64, step: StepRecord) {
        if let Some(r) = &self.reference {
            self.error = distance(r, &step.x_after);
        }
        self.push(eval_index, step.f_after, step.regime, Event::Accept);
        if self.record_steps {
            self.steps.push(step);
        }
    }
}
