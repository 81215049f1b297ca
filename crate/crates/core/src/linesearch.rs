//! Backtracking line search on the Armijo condition
//! `f(x − ηΔ) ≤ f(x) − αη‖Δ‖²`, with an optional step floor `η_min` below which
//! the search gives up and reports failure.

use crate::composite::CompositeObjective;
use crate::error::{Error, Result};
use crate::matlin::{axpy_step, dot};

/// Most shrinks a single search may perform. Only reachable with `η_min = 0`.
pub const MAX_HALVINGS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSearchParams {
    pub alpha: f64,
    pub beta: f64,
    pub eta_min: f64,
    pub eta_max: f64,
}

impl LineSearchParams {
    pub fn new(alpha: f64, beta: f64, eta_min: f64, eta_max: f64) -> Result<Self> {
        let params = Self {
            alpha,
            beta,
            eta_min,
            eta_max,
        };
        params.validate()?;
        Ok(params)
    }

    /// The unfloored search used with exact gradients.
    pub fn standard(alpha: f64, beta: f64, eta_max: f64) -> Result<Self> {
        Self::new(alpha, beta, 0.0, eta_max)
    }

    pub fn validate(&self) -> Result<()> {
        // α = 1/2 is admitted: the worked sufficient-decrease example sits on it.
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1/2], got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if !(self.eta_min >= 0.0 && self.eta_max > self.eta_min && self.eta_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= eta_min < eta_max, got eta_min={} eta_max={}",
                self.eta_min, self.eta_max
            )));
        }
        Ok(())
    }

    pub fn with_eta_min(mut self, eta_min: f64) -> Self {
        self.eta_min = eta_min;
        self
    }
}

/// One Armijo test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trial {
    pub eta: f64,
    pub value: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineSearchOutcome {
    /// Accepted step, or `0.0` when the search failed.
    pub eta: f64,
    /// `x − ηΔ` on success, `x` itself on failure.
    pub accepted_point: Vec<f64>,
    pub f_at_accepted: f64,
    pub evals_used: u64,
    /// Failure came from [`MAX_HALVINGS`] rather than the step floor.
    pub hit_cap: bool,
    pub trials: Vec<Trial>,
}

impl LineSearchOutcome {
    pub fn failed(&self) -> bool {
        self.eta == 0.0
    }
}

/// Backtracking from `η_max` by factor `β`. Each trial costs one evaluation;
/// `f_x` is the known `f(x)` and is not re-evaluated.
///
/// A trial at `η ≤ η_min` is still tested; if it fails the search returns
/// `η = 0`. For a nonzero direction a trial must also lower `f` strictly,
/// which the Armijo test implies except when rounding hides the decrease.
pub fn bt_line_search<O: CompositeObjective + ?Sized>(
    obj: &mut O,
    x: &[f64],
    f_x: f64,
    direction: &[f64],
    params: &LineSearchParams,
) -> Result<LineSearchOutcome> {
    params.validate()?;
    if direction.len() != x.len() {
        return Err(Error::DimensionMismatch("direction and point lengths differ".into()));
    }
    let slope = dot(direction, direction);
    let mut eta = params.eta_max;
    let mut trials = Vec::new();
    let mut shrinks = 0;
    loop {
        let candidate = axpy_step(x, eta, direction);
        let value = obj.value(&candidate)?;
        let rhs = f_x - params.alpha * eta * slope;
        trials.push(Trial { eta, value, rhs });
        // NaN and +inf trial values never satisfy this comparison. The strict
        // decrease only matters once αη‖Δ‖² drops below the resolution of
        // f(x): such a step cannot make progress and is treated as rejected.
        if value <= rhs && (value < f_x || slope == 0.0) {
            return Ok(LineSearchOutcome {
                eta,
                accepted_point: candidate,
                f_at_accepted: value,
                evals_used: trials.len() as u64,
                hit_cap: false,
                trials,
            });
        }
        if eta > params.eta_min && shrinks < MAX_HALVINGS {
            eta *= params.beta;
            shrinks += 1;
        } else {
            return Ok(LineSearchOutcome {
                eta: 0.0,
                accepted_point: x.to_vec(),
                f_at_accepted: f_x,
                evals_used: trials.len() as u64,
                hit_cap: shrinks == MAX_HALVINGS,
                trials,
            });
        }
    }
}

/// Most evaluations one search can spend: the smallest `m` with
/// `β^{m−1} η_max ≤ η_min`, i.e. `⌈log(η_min/η_max)/log β + 1⌉`. The count is
/// taken by replaying the trial schedule so it agrees with
/// [`bt_line_search`] bit for bit. With `η_min = 0` the cap
/// `MAX_HALVINGS + 1` is returned.
pub fn m_max(params: &LineSearchParams) -> u64 {
    if params.eta_min <= 0.0 {
        return MAX_HALVINGS as u64 + 1;
    }
    let mut eta = params.eta_max;
    let mut m = 1;
    while eta > params.eta_min && m <= MAX_HALVINGS as u64 {
        eta *= params.beta;
        m += 1;
    }
    m
}
