//! Random convex quadratic benchmark:
//! `f̂(x) = c1·xᵀPx/2` and `r(x) = c2·(x − c3)ᵀQ(x − c3)/2`.

use crate::composite::{finite_difference_gradient, CompositeObjective, EvalCounter, ExactGradient, GradientScheme};
use crate::error::{Error, Result};
use crate::matlin::{random_spd, random_spd_with_spectral_radius, symmetric_extreme_eigenvalues, Matrix, Rng};

/// Forward-difference step of the default exact-gradient oracle.
pub const FD_STEP: f64 = 1e-6;

pub const DEFAULT_N: usize = 4;
pub const DEFAULT_C1: f64 = 1.0;
pub const DEFAULT_C2: f64 = 0.1;
pub const DEFAULT_C3: f64 = 0.1;
pub const DEFAULT_Q_RADIUS: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticInstance {
    pub n: usize,
    /// Model Hessian (scaled by `c1`).
    pub p: Matrix,
    /// Residual Hessian (scaled by `c2`).
    pub q: Matrix,
    pub c1: f64,
    pub c2: f64,
    /// Shift of the residual, one entry per coordinate.
    pub c3: Vec<f64>,
    pub x_star: Vec<f64>,
    pub x_hat_star: Vec<f64>,
    /// `c2·λ_max(Q)`, the Lipschitz constant of `∇r`.
    pub lipschitz_true: f64,
}

impl QuadraticInstance {
    /// Assembles an instance and solves `(c1 P + c2 Q) x = c2 Q c3` for the optimum.
    pub fn from_parts(p: Matrix, q: Matrix, c1: f64, c2: f64, c3: Vec<f64>) -> Result<Self> {
        let n = p.rows();
        if !p.is_square() || q.rows() != n || q.cols() != n || c3.len() != n {
            return Err(Error::DimensionMismatch("quadratic instance parts disagree".into()));
        }
        if !(c1 > 0.0 && c2 >= 0.0) {
            return Err(Error::InvalidParameter(format!("need c1 > 0 and c2 >= 0, got {c1}, {c2}")));
        }
        let hessian = &p.scale(c1) + &q.scale(c2);
        let rhs = q.scale(c2).matvec(&c3);
        let x_star = hessian.solve_vec(&rhs)?;
        let (_, q_max) = symmetric_extreme_eigenvalues(&q)?;
        Ok(Self {
            n,
            p,
            q,
            c1,
            c2,
            c3,
            x_star,
            x_hat_star: vec![0.0; n],
            lipschitz_true: c2 * q_max,
        })
    }

    /// The smoothness constant the benchmark description quotes, `L_r = c2`,
    /// which equals [`Self::lipschitz_true`] only when `λ_max(Q) = 1`.
    pub fn lipschitz_stated(&self) -> f64 {
        self.c2
    }

    /// `∇²f = c1 P + c2 Q`
    pub fn hessian(&self) -> Matrix {
        &self.p.scale(self.c1) + &self.q.scale(self.c2)
    }

    /// Strong-convexity (and PL) constant `λ_min(∇²f)`.
    pub fn mu(&self) -> Result<f64> {
        Ok(symmetric_extreme_eigenvalues(&self.hessian())?.0)
    }

    /// Smoothness constant `λ_max(∇²f)`.
    pub fn l_f(&self) -> Result<f64> {
        Ok(symmetric_extreme_eigenvalues(&self.hessian())?.1)
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        let shifted: Vec<f64> = x.iter().zip(&self.c3).map(|(a, b)| a - b).collect();
        self.c1 * self.p.quad_form(x) / 2.0 + self.c2 * self.q.quad_form(&shifted) / 2.0
    }

    pub fn f_hat(&self, x: &[f64]) -> f64 {
        self.c1 * self.p.quad_form(x) / 2.0
    }

    pub fn f_star(&self) -> f64 {
        self.f(&self.x_star)
    }

    pub fn grad_f_hat(&self, x: &[f64]) -> Vec<f64> {
        self.p.scale(self.c1).matvec(x)
    }

    /// `∇r(x) = c2 Q (x − c3)`
    pub fn grad_r(&self, x: &[f64]) -> Vec<f64> {
        let shifted: Vec<f64> = x.iter().zip(&self.c3).map(|(a, b)| a - b).collect();
        self.q.scale(self.c2).matvec(&shifted)
    }

    pub fn grad_f(&self, x: &[f64]) -> Vec<f64> {
        self.grad_f_hat(x)
            .iter()
            .zip(self.grad_r(x))
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// Random instance: `P = MᵀM` with Gaussian `M`, `Q` with spectral radius
/// `spectral_radius_q`, and `c3` broadcast to every coordinate.
pub fn make_quadratic(
    rng: &mut Rng,
    n: usize,
    c1: f64,
    c2: f64,
    c3: f64,
    spectral_radius_q: f64,
) -> Result<QuadraticInstance> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let p = random_spd(rng, n)?;
    let q = random_spd_with_spectral_radius(rng, n, spectral_radius_q)?;
    QuadraticInstance::from_parts(p, q, c1, c2, vec![c3; n])
}

/// Instance with the benchmark's default constants for a given seed.
pub fn default_quadratic(seed: u64) -> Result<QuadraticInstance> {
    make_quadratic(
        &mut Rng::new(seed),
        DEFAULT_N,
        DEFAULT_C1,
        DEFAULT_C2,
        DEFAULT_C3,
        DEFAULT_Q_RADIUS,
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QuadGradientOracle {
    FiniteDifference { scheme: GradientScheme, step: f64 },
    /// Analytic `∇f`; uncounted and flagged as oracle-mode.
    Analytic,
}

/// [`CompositeObjective`] view of a quadratic instance.
#[derive(Clone, Debug)]
pub struct QuadObjective {
    inst: QuadraticInstance,
    oracle: QuadGradientOracle,
    counter: EvalCounter,
}

impl QuadObjective {
    pub fn instance(&self) -> &QuadraticInstance {
        &self.inst
    }

    pub fn with_oracle(mut self, oracle: QuadGradientOracle) -> Self {
        self.oracle = oracle;
        self
    }

    /// Switches to analytic exact gradients (test mode).
    pub fn analytic(self) -> Self {
        self.with_oracle(QuadGradientOracle::Analytic)
    }
}

/// Objective with the default forward-difference exact gradient.
pub fn quad_objective(inst: QuadraticInstance) -> QuadObjective {
    QuadObjective {
        inst,
        oracle: QuadGradientOracle::FiniteDifference {
            scheme: GradientScheme::Forward,
            step: FD_STEP,
        },
        counter: EvalCounter::new(),
    }
}

impl CompositeObjective for QuadObjective {
    fn dim(&self) -> usize {
        self.inst.n
    }

    fn value(&mut self, x: &[f64]) -> Result<f64> {
        self.counter.record();
        Ok(self.inst.f(x))
    }

    fn exact_gradient(&mut self, x: &[f64], f_x: f64) -> Result<ExactGradient> {
        match self.oracle {
            QuadGradientOracle::Analytic => Ok(ExactGradient {
                gradient: self.inst.grad_f(x),
                evals: 0,
                oracle_mode: true,
            }),
            QuadGradientOracle::FiniteDifference { scheme, step } => {
                let inst = &self.inst;
                let counter = &mut self.counter;
                let (gradient, evals) = finite_difference_gradient(
                    |p| {
                        counter.record();
                        Ok(inst.f(p))
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
        Ok(self.inst.grad_f_hat(x))
    }

    fn model_value(&self, x: &[f64]) -> Option<f64> {
        Some(self.inst.f_hat(x))
    }

    fn evaluations(&self) -> u64 {
        self.counter.get()
    }
}
