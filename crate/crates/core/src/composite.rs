//! Composite objectives `f = f̂ + r`: a closed-form model part `f̂` whose gradient
//! is free, plus a black-box residual `r` reached only through evaluations of
//! `f`. Also holds the compensation state that corrects the model gradient.

use crate::error::{Error, Result};
use crate::matlin::norm;

/// Monotone count of objective evaluations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalCounter {
    count: u64,
}

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self) {
        self.count += 1;
    }

    pub fn get(&self) -> u64 {
        self.count
    }
}

/// Zeroth-order scheme used to estimate an exact gradient from evaluations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GradientScheme {
    /// `(f(x + h e_j) − f(x)) / h`; reuses the known `f(x)`, so `dim` evaluations.
    Forward,
    /// `(f(x + h e_j) − f(x − h e_j)) / 2h`; `2·dim` evaluations.
    Central,
    /// `f(x + h e_j) / h`, the coordinate one-point estimator taken literally;
    /// `dim` evaluations. Biased by `f(x)/h` in every coordinate.
    OnePoint,
}

impl GradientScheme {
    pub fn evals_per_gradient(self, dim: usize) -> u64 {
        match self {
            GradientScheme::Central => 2 * dim as u64,
            GradientScheme::Forward | GradientScheme::OnePoint => dim as u64,
        }
    }
}

/// An exact-gradient measurement and what it cost.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactGradient {
    pub gradient: Vec<f64>,
    pub evals: u64,
    /// Set when the gradient came from an analytic test oracle; such calls
    /// are free and must not be compared against evaluation budgets.
    pub oracle_mode: bool,
}

pub trait CompositeObjective {
    fn dim(&self) -> usize;

    /// `f(x)`. Each call is one function evaluation.
    fn value(&mut self, x: &[f64]) -> Result<f64>;

    /// `∇f(x)`. `f_x` is the already-known value at `x`, which forward
    /// differences reuse instead of paying for it again.
    fn exact_gradient(&mut self, x: &[f64], f_x: f64) -> Result<ExactGradient>;

    /// `∇f̂(x)`, closed form, never counted.
    fn model_gradient(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn model_value(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    fn evaluations(&self) -> u64;
}

/// Coordinate finite differences with step `h`. Every call of `f` is one
/// evaluation; the count is returned alongside the estimate.
pub fn finite_difference_gradient<F>(
    mut f: F,
    x: &[f64],
    f_x: f64,
    scheme: GradientScheme,
    h: f64,
) -> Result<(Vec<f64>, u64)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("difference step must be positive, got {h}")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    let mut evals = 0;
    for j in 0..x.len() {
        probe[j] = x[j] + h;
        let plus = f(&probe)?;
        evals += 1;
        let g = match scheme {
            GradientScheme::Forward => (plus - f_x) / h,
            GradientScheme::OnePoint => plus / h,
            GradientScheme::Central => {
                probe[j] = x[j] - h;
                let minus = f(&probe)?;
                evals += 1;
                (plus - minus) / (2.0 * h)
            }
        };
        probe[j] = x[j];
        grad.push(g);
    }
    Ok((grad, evals))
}

/// Where an [`FnObjective`] gets its exact gradient.
pub enum ExactSource {
    FiniteDifference { scheme: GradientScheme, step: f64 },
    /// Analytic `∇f`, for tests only; reported as oracle-mode and uncounted.
    Analytic(GradFn),
}

type ValueFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Composite objective assembled from closures.
pub struct FnObjective {
    dim: usize,
    f: ValueFn,
    model_grad: GradFn,
    model_value: Option<ValueFn>,
    exact: ExactSource,
    counter: EvalCounter,
}

impl FnObjective {
    pub fn new(
        dim: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        model_grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        exact: ExactSource,
    ) -> Self {
        Self {
            dim,
            f: Box::new(f),
            model_grad: Box::new(model_grad),
            model_value: None,
            exact,
            counter: EvalCounter::new(),
        }
    }

    pub fn with_model_value(mut self, fhat: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.model_value = Some(Box::new(fhat));
        self
    }
}

impl CompositeObjective for FnObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&mut self, x: &[f64]) -> Result<f64> {
        self.counter.record();
        Ok((self.f)(x))
    }

    fn exact_gradient(&mut self, x: &[f64], f_x: f64) -> Result<ExactGradient> {
        match &self.exact {
            ExactSource::Analytic(g) => Ok(ExactGradient {
                gradient: g(x),
                evals: 0,
                oracle_mode: true,
            }),
            &ExactSource::FiniteDifference { scheme, step } => {
                let f = &self.f;
                let counter = &mut self.counter;
                let (gradient, evals) = finite_difference_gradient(
                    |p| {
                        counter.record();
                        Ok(f(p))
                    },
                    x,
                    f_x,
                    scheme,
                    step,
                )?;
                Ok(ExactGradient {
                    gradient,
                    evals,
                    oracle_mode: false,
                })
            }
        }
    }

    fn model_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.model_grad)(x))
    }

    fn model_value(&self, x: &[f64]) -> Option<f64> {
        self.model_value.as_ref().map(|f| f(x))
    }

    fn evaluations(&self) -> u64 {
        self.counter.get()
    }
}

/// Result of measuring the compensation at a point `x̃`.
#[derive(Clone, Debug, PartialEq)]
pub struct Compensation {
    /// `δ = ∇f(x̃) − ∇f̂(x̃)`
    pub delta: Vec<f64>,
    pub exact_gradient: Vec<f64>,
    pub evals: u64,
}

/// Measures `δ = ∇f(x̃) − ∇f̂(x̃)`. `f_x_tilde` is the known value `f(x̃)`.
pub fn compensate<O: CompositeObjective + ?Sized>(obj: &mut O, x_tilde: &[f64], f_x_tilde: f64) -> Result<Compensation> {
    if x_tilde.len() != obj.dim() {
        return Err(Error::DimensionMismatch(format!(
            "point of length {} for a {}-dimensional objective",
            x_tilde.len(),
            obj.dim()
        )));
    }
    let exact = obj.exact_gradient(x_tilde, f_x_tilde)?;
    let model = obj.model_gradient(x_tilde)?;
    let delta = exact.gradient.iter().zip(&model).map(|(g, m)| g - m).collect();
    Ok(Compensation {
        delta,
        exact_gradient: exact.gradient,
        evals: exact.evals,
    })
}

/// The compensation `δ`, the running error bound `ē`, and the constants that
/// govern the monitor `ē ≤ (1−γ)/γ · ‖g̃‖`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompensationState {
    pub delta: Vec<f64>,
    pub ebar: f64,
    /// Lipschitz constant of `∇r`.
    pub lipschitz: f64,
    pub gamma: f64,
}

impl CompensationState {
    pub fn new(delta: Vec<f64>, lipschitz: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidParameter(format!("L_r must be non-negative, got {lipschitz}")));
        }
        Ok(Self {
            delta,
            ebar: 0.0,
            lipschitz,
            gamma,
        })
    }

    pub fn with_ebar(mut self, ebar: f64) -> Self {
        self.ebar = ebar.max(0.0);
        self
    }

    /// `g̃(x) = ∇f̂(x) + δ`; costs no evaluations.
    pub fn compensated_gradient<O: CompositeObjective + ?Sized>(&self, obj: &O, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = obj.model_gradient(x)?;
        for (gi, d) in g.iter_mut().zip(&self.delta) {
            *gi += d;
        }
        Ok(g)
    }

    /// `ē ← L_r‖x_next − x_prev‖ + ē`
    pub fn ebar_update(&self, x_prev: &[f64], x_next: &[f64]) -> Self {
        let mut next = self.clone();
        next.advance(x_prev, x_next);
        next
    }

    pub fn advance(&mut self, x_prev: &[f64], x_next: &[f64]) {
        self.ebar += self.lipschitz * crate::matlin::distance(x_prev, x_next);
    }

    /// Monitor test. A zero `g̃` always fails so the caller leaves the
    /// model-based regime and checks stationarity with the exact gradient.
    pub fn monitor_ok(&self, gtilde: &[f64]) -> bool {
        let gnorm = norm(gtilde);
        if gnorm == 0.0 {
            return false;
        }
        self.ebar <= (1.0 - self.gamma) / self.gamma * gnorm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shifted_square() -> FnObjective {
        // f(x) = (x−2)², f̂(x) = x²
        FnObjective::new(
            1,
            |x| (x[0] - 2.0).powi(2),
            |x| vec![2.0 * x[0]],
            ExactSource::Analytic(Box::new(|x| vec![2.0 * (x[0] - 2.0)])),
        )
    }

    #[test]
    fn zero_residual_gives_zero_delta() {
        let mut obj = FnObjective::new(
            2,
            |x| x[0] * x[0] + 3.0 * x[1] * x[1],
            |x| vec![2.0 * x[0], 6.0 * x[1]],
            ExactSource::Analytic(Box::new(|x| vec![2.0 * x[0], 6.0 * x[1]])),
        );
        let c = compensate(&mut obj, &[0.3, -1.0], 0.0).unwrap();
        assert_eq!(c.delta, vec![0.0, 0.0]);
        assert_eq!(obj.evaluations(), 0);
    }

    #[test]
    fn scalar_compensation_makes_model_exact() {
        let mut obj = shifted_square();
        let c = compensate(&mut obj, &[0.0], 4.0).unwrap();
        assert_eq!(c.delta, vec![-4.0]);
        let state = CompensationState::new(c.delta, 0.0, 0.5).unwrap();
        // g̃(x) = 2x − 4 = ∇f(x) everywhere for this pair.
        for x in [-3.0, 0.0, 1.5, 7.0] {
            assert_eq!(state.compensated_gradient(&obj, &[x]).unwrap(), vec![2.0 * x - 4.0]);
        }
        assert_eq!(state.compensated_gradient(&obj, &[3.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn zero_compensation_is_the_model_gradient() {
        let obj = shifted_square();
        let state = CompensationState::new(vec![0.0], 0.0, 0.5).unwrap();
        assert_eq!(state.compensated_gradient(&obj, &[1.25]).unwrap(), vec![2.5]);
        assert_eq!(obj.evaluations(), 0);
    }

    #[test]
    fn ebar_recursion() {
        let s = CompensationState::new(vec![0.0], 0.1, 0.5).unwrap().with_ebar(0.3);
        let next = s.ebar_update(&[0.0, 0.0], &[2.0, 0.0]);
        assert!((next.ebar - 0.5).abs() < 1e-15);

        let frozen = CompensationState::new(vec![0.0], 0.0, 0.5).unwrap().with_ebar(0.7);
        assert_eq!(frozen.ebar_update(&[0.0], &[5.0]).ebar, 0.7);

        // k equal steps of length s accumulate k·L_r·s from a reset bound.
        let mut s = CompensationState::new(vec![0.0], 0.25, 0.5).unwrap();
        let mut x = 0.0;
        for _ in 0..8 {
            s.advance(&[x], &[x + 0.5]);
            x += 0.5;
        }
        assert!((s.ebar - 8.0 * 0.25 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn monitor_cases() {
        let fresh = CompensationState::new(vec![0.0], 1.0, 0.5).unwrap();
        assert!(fresh.monitor_ok(&[1e-9]));
        let loaded = fresh.clone().with_ebar(1.0);
        assert!(!loaded.monitor_ok(&[0.9]));
        assert!(loaded.monitor_ok(&[1.0]));
        assert!(!fresh.monitor_ok(&[0.0, 0.0]));
    }

    #[test]
    fn invalid_gamma_is_rejected() {
        assert!(CompensationState::new(vec![], 0.1, 1.0).is_err());
        assert!(CompensationState::new(vec![], 0.1, 0.0).is_err());
        assert!(CompensationState::new(vec![], -0.1, 0.5).is_err());
    }

    #[test]
    fn finite_difference_costs() {
        let f = |x: &[f64]| Ok(x.iter().map(|v| v * v).sum::<f64>());
        let x = [1.0, -2.0, 0.5];
        let fx = 5.25;
        let (g, n) = finite_difference_gradient(f, &x, fx, GradientScheme::Central, 1e-4).unwrap();
        assert_eq!(n, 6);
        for (gi, xi) in g.iter().zip(&x) {
            assert!((gi - 2.0 * xi).abs() < 1e-8);
        }
        let (_, n) = finite_difference_gradient(f, &x, fx, GradientScheme::Forward, 1e-6).unwrap();
        assert_eq!(n, 3);
        let (g, _) = finite_difference_gradient(f, &x, fx, GradientScheme::OnePoint, 1e-3).unwrap();
        assert!((g[0] - f(&[1.001, -2.0, 0.5]).unwrap() / 1e-3).abs() < 1e-9);
    }

    #[test]
    fn counted_finite_difference_objective() {
        let mut obj = FnObjective::new(
            2,
            |x| x[0] * x[0] + x[1],
            |x| vec![2.0 * x[0], 0.0],
            ExactSource::FiniteDifference {
                scheme: GradientScheme::Central,
                step: 1e-5,
            },
        );
        let fx = obj.value(&[1.0, 1.0]).unwrap();
        let g = obj.exact_gradient(&[1.0, 1.0], fx).unwrap();
        assert_eq!(g.evals, 4);
        assert!(!g.oracle_mode);
        assert_eq!(obj.evaluations(), 5);
        assert!((g.gradient[1] - 1.0).abs() < 1e-9);
    }
}
