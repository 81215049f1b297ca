//! Linear-quadratic regulation with a small nonlinear state perturbation:
//! `x_{t+1} = A x_t + B u_t + h(x_t)`, `u_t = −K x_t`, with
//! `h(x)_i = ℓ x_i / (1 − 0.9 sin x_i)`.
//!
//! The true objective is the finite-horizon empirical cost averaged over a
//! fixed set of initial states. The model is the same system with `h ≡ 0`
//! and an infinite horizon, whose gradient `2 E_K Σ_K` is available in closed
//! form.

use crate::composite::{finite_difference_gradient, CompositeObjective, EvalCounter, ExactGradient, GradientScheme};
use crate::error::{Error, Result};
use crate::linesearch::LineSearchParams;
use crate::matlin::{
    gaussian_matrix, norm, solve_dare, solve_discrete_lyapunov, spectral_radius, Matrix, Rng, DEFAULT_MAX_ITER,
    RICCATI_TOL,
};
use crate::solver::{model_free_solve, GcConfig, StopReason, Termination};

pub const DEFAULT_N: usize = 4;
pub const DEFAULT_P: usize = 3;
pub const DEFAULT_ELL: f64 = 0.01;
pub const DEFAULT_HORIZON: usize = 50;
pub const DEFAULT_SAMPLING_RADIUS: f64 = 1e-3;
/// States with a larger Euclidean norm count as a diverged rollout.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;
pub const MAX_GENERATION_ATTEMPTS: usize = 50;
/// Standard deviation of the entries of `A` and `B`. With unit variance the
/// admissible gradient steps on `n = 4` instances are near `0.01`, far below
/// the usual step floor of `0.05`; at `1/√n` no step ever needs to go below it.
pub const SYSTEM_ENTRY_STD: f64 = 0.7;
/// Gradient-norm tolerance for [`reference_optimum`].
pub const REFERENCE_TOL: f64 = 1e-4;
pub const REFERENCE_MAX_ITERS: usize = 50_000;

const STABILITY_TOL: f64 = 1e-12;
const LYAPUNOV_REL_TOL: f64 = 1e-10;

/// Family of the state perturbation `h`. Only the state-dependent
/// `ℓ x / (1 − 0.9 sin x)` family is implemented.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Perturbation {
    ScaledSineRational { ell: f64 },
}

impl Perturbation {
    pub fn name(&self) -> &'static str {
        match self {
            Perturbation::ScaledSineRational { .. } => "scaled-sine-rational",
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| self.component(v)).collect()
    }

    /// `h` acts elementwise.
    pub fn component(&self, v: f64) -> f64 {
        match *self {
            // The denominator is at least 0.1.
            Perturbation::ScaledSineRational { ell } => ell * v / (1.0 - 0.9 * v.sin()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LqrInstance {
    pub n: usize,
    pub p: usize,
    pub a: Matrix,
    pub b: Matrix,
    pub qc: Matrix,
    pub rc: Matrix,
    pub h: Perturbation,
    pub ell: f64,
    pub horizon: usize,
    /// Perturbation size of the zeroth-order gradient.
    pub sampling_radius: f64,
    pub initial_states: Vec<Vec<f64>>,
    /// Optimal gain of the unperturbed infinite-horizon problem.
    pub k_hat_star: Matrix,
    /// Optimum of the true cost, once computed.
    pub k_star_ref: Option<Matrix>,
}

impl LqrInstance {
    /// Builds an instance around given system matrices, solving the Riccati
    /// equation for `K̂⋆`. Initial states default to the standard basis.
    pub fn from_system(
        a: Matrix,
        b: Matrix,
        qc: Matrix,
        rc: Matrix,
        ell: f64,
        horizon: usize,
        sampling_radius: f64,
    ) -> Result<Self> {
        let n = a.rows();
        let p = b.cols();
        if !a.is_square() || b.rows() != n || qc.rows() != n || qc.cols() != n || rc.rows() != p || rc.cols() != p {
            return Err(Error::DimensionMismatch("lqr system shapes disagree".into()));
        }
        if !(sampling_radius > 0.0) || horizon == 0 {
            return Err(Error::InvalidParameter(
                "sampling radius and horizon must be positive".into(),
            ));
        }
        let dare = solve_dare(&a, &b, &qc, &rc, RICCATI_TOL, DEFAULT_MAX_ITER)?;
        let initial_states = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
        Ok(Self {
            n,
            p,
            a,
            b,
            qc,
            rc,
            h: Perturbation::ScaledSineRational { ell },
            ell,
            horizon,
            sampling_radius,
            initial_states,
            k_hat_star: dare.gain,
            k_star_ref: None,
        })
    }

    /// `A − B K`
    pub fn closed_loop(&self, k: &Matrix) -> Matrix {
        &self.a - &(&self.b * k)
    }

    /// `Σ₀`, the average of `x₀ x₀ᵀ` over the initial states.
    pub fn sigma0(&self) -> Matrix {
        let mut s = Matrix::zeros(self.n, self.n);
        for x0 in &self.initial_states {
            let col = Matrix::column(x0);
            s = &s + &(&col * &col.transpose());
        }
        s.scale(1.0 / self.initial_states.len().max(1) as f64)
    }

    pub fn gain_from_flat(&self, k: &[f64]) -> Result<Matrix> {
        Matrix::from_row_major(self.p, self.n, k.to_vec())
    }

    fn check_gain(&self, k: &Matrix) -> Result<()> {
        if k.rows() != self.p || k.cols() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "gain is {}x{}, expected {}x{}",
                k.rows(),
                k.cols(),
                self.p,
                self.n
            )));
        }
        Ok(())
    }
}

pub fn h_eval(inst: &LqrInstance, x: &[f64]) -> Vec<f64> {
    inst.h.apply(x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    /// `x_0 … x_{T+1}`
    pub states: Vec<Vec<f64>>,
    /// `u_0 … u_T`
    pub inputs: Vec<Vec<f64>>,
    pub cost: f64,
}

fn step(inst: &LqrInstance, k: &Matrix, x: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let u: Vec<f64> = k.matvec(x).iter().map(|v| -v).collect();
    let stage = inst.qc.quad_form(x) + inst.rc.quad_form(&u);
    let ax = inst.a.matvec(x);
    let bu = inst.b.matvec(&u);
    let hx = inst.h.apply(x);
    let next = (0..inst.n).map(|i| ax[i] + bu[i] + hx[i]).collect();
    (next, u, stage)
}

fn diverged(x: &[f64]) -> bool {
    let nx = norm(x);
    !(nx <= DIVERGENCE_THRESHOLD)
}

/// Simulates `T + 1` steps of the closed loop from `x0`.
pub fn rollout(inst: &LqrInstance, k: &Matrix, x0: &[f64]) -> Result<Rollout> {
    inst.check_gain(k)?;
    if x0.len() != inst.n {
        return Err(Error::DimensionMismatch("initial state length".into()));
    }
    let mut states = vec![x0.to_vec()];
    let mut inputs = Vec::with_capacity(inst.horizon + 1);
    let mut cost = 0.0;
    for t in 0..=inst.horizon {
        let (next, u, stage) = step(inst, k, &states[t]);
        cost += stage;
        inputs.push(u);
        if diverged(&next) {
            return Err(Error::Diverged { step: t + 1 });
        }
        states.push(next);
    }
    Ok(Rollout { states, inputs, cost })
}

fn rollout_cost(inst: &LqrInstance, k: &Matrix, x0: &[f64]) -> Result<f64> {
    // Same arithmetic as `step`, in reused buffers.
    let (n, p) = (inst.n, inst.p);
    let mut x = x0.to_vec();
    let mut next = vec![0.0; n];
    let mut u = vec![0.0; p];
    let mut cost = 0.0;
    for t in 0..=inst.horizon {
        for (i, ui) in u.iter_mut().enumerate() {
            *ui = -k.row(i).iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
        }
        cost += inst.qc.quad_form(&x) + inst.rc.quad_form(&u);
        for (i, slot) in next.iter_mut().enumerate() {
            let ax: f64 = inst.a.row(i).iter().zip(&x).map(|(a, b)| a * b).sum();
            let bu: f64 = inst.b.row(i).iter().zip(&u).map(|(a, b)| a * b).sum();
            *slot = ax + bu + inst.h.component(x[i]);
        }
        if diverged(&next) {
            return Err(Error::Diverged { step: t + 1 });
        }
        std::mem::swap(&mut x, &mut next);
    }
    Ok(cost)
}

/// Mean rollout cost over the initial states, summed in their stored order.
/// Counts as one evaluation whether or not the rollout diverges.
pub fn empirical_cost(inst: &LqrInstance, k: &Matrix, counter: &mut EvalCounter) -> Result<f64> {
    inst.check_gain(k)?;
    counter.record();
    let mut total = 0.0;
    for x0 in &inst.initial_states {
        total += rollout_cost(inst, k, x0)?;
    }
    Ok(total / inst.initial_states.len().max(1) as f64)
}

/// Coordinate zeroth-order gradient of the empirical cost with perturbation
/// `r_s` along each of the `p·n` unit gain directions.
///
/// `OnePoint` returns `C(K + r_s E_j)/r_s` per coordinate and is kept for
/// comparison only: it is offset by `C(K)/r_s`. `Forward` is not offered here.
pub fn zeroth_order_grad(
    inst: &LqrInstance,
    k: &Matrix,
    counter: &mut EvalCounter,
    scheme: GradientScheme,
) -> Result<(Matrix, u64)> {
    inst.check_gain(k)?;
    if scheme == GradientScheme::Forward {
        return Err(Error::InvalidParameter(
            "lqr gradients use the central or one-point scheme".into(),
        ));
    }
    let (g, evals) = finite_difference_gradient(
        |flat| empirical_cost(inst, &inst.gain_from_flat(flat)?, counter),
        k.as_slice(),
        f64::NAN,
        scheme,
        inst.sampling_radius,
    )?;
    Ok((Matrix::from_row_major(inst.p, inst.n, g)?, evals))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LqrGradientWorkspace {
    pub a_k: Matrix,
    pub p_k: Matrix,
    pub sigma_k: Matrix,
    pub e_k: Matrix,
}

fn lyapunov_tol(w: &Matrix) -> f64 {
    LYAPUNOV_REL_TOL * w.frobenius_norm().max(1.0)
}

/// `∇Ĉ(K) = 2 E_K Σ_K` of the unperturbed infinite-horizon cost, with
/// `E_K = (R + BᵀP_K B)K − BᵀP_K A`. Costs no evaluations.
pub fn model_gradient(inst: &LqrInstance, k: &Matrix) -> Result<(Matrix, LqrGradientWorkspace)> {
    inst.check_gain(k)?;
    let a_k = inst.closed_loop(k);
    let weight = &inst.qc + &(&(&k.transpose() * &inst.rc) * k);
    let p_k = solve_discrete_lyapunov(&a_k, &weight, lyapunov_tol(&weight), DEFAULT_MAX_ITER)?;
    let sigma0 = inst.sigma0();
    let sigma_k = solve_discrete_lyapunov(&a_k.transpose(), &sigma0, lyapunov_tol(&sigma0), DEFAULT_MAX_ITER)?;
    let bt_p = &inst.b.transpose() * &p_k;
    let e_k = &(&(&inst.rc + &(&bt_p * &inst.b)) * k) - &(&bt_p * &inst.a);
    let g = (&e_k * &sigma_k).scale(2.0);
    Ok((
        g,
        LqrGradientWorkspace {
            a_k,
            p_k,
            sigma_k,
            e_k,
        },
    ))
}

/// `Ĉ(K) = tr(P_K Σ₀)`, or `None` for a destabilizing gain.
pub fn model_cost(inst: &LqrInstance, k: &Matrix) -> Option<f64> {
    let a_k = inst.closed_loop(k);
    let weight = &inst.qc + &(&(&k.transpose() * &inst.rc) * k);
    let p_k = solve_discrete_lyapunov(&a_k, &weight, lyapunov_tol(&weight), DEFAULT_MAX_ITER).ok()?;
    Some((&p_k * &inst.sigma0()).trace())
}

/// Random instance with `A`, `B` entries drawn from `N(0, SYSTEM_ENTRY_STD²)`. A draw is rejected when the
/// Riccati gain does not stabilize the linear system or any rollout of the
/// perturbed system under it diverges.
pub fn make_lqr(rng: &mut Rng, n: usize, p: usize, ell: f64, horizon: usize, sampling_radius: f64) -> Result<LqrInstance> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter("lqr dimensions must be positive".into()));
    }
    let mut reason = String::new();
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let a = gaussian_matrix(rng, n, n).scale(SYSTEM_ENTRY_STD);
        let b = gaussian_matrix(rng, n, p).scale(SYSTEM_ENTRY_STD);
        let inst = match LqrInstance::from_system(
            a,
            b,
            Matrix::identity(n).scale(2.0),
            Matrix::identity(p),
            ell,
            horizon,
            sampling_radius,
        ) {
            Ok(inst) => inst,
            Err(e @ (Error::InvalidParameter(_) | Error::DimensionMismatch(_))) => return Err(e),
            Err(e) => {
                reason = e.to_string();
                continue;
            }
        };
        match spectral_radius(&inst.closed_loop(&inst.k_hat_star), STABILITY_TOL) {
            Ok(rho) if rho < 1.0 => {}
            Ok(rho) => {
                reason = format!("riccati gain leaves spectral radius {rho}");
                continue;
            }
            Err(e) => {
                reason = e.to_string();
                continue;
            }
        }
        let probes_ok = inst
            .initial_states
            .iter()
            .all(|x0| rollout_cost(&inst, &inst.k_hat_star, x0).is_ok());
        if probes_ok {
            return Ok(inst);
        }
        reason = "perturbed rollout under the riccati gain diverged".into();
    }
    Err(Error::GenerationFailed {
        attempts: MAX_GENERATION_ATTEMPTS,
        reason,
    })
}

/// Instance with the benchmark's default constants for a given seed.
pub fn default_lqr(seed: u64) -> Result<LqrInstance> {
    make_lqr(
        &mut Rng::new(seed),
        DEFAULT_N,
        DEFAULT_P,
        DEFAULT_ELL,
        DEFAULT_HORIZON,
        DEFAULT_SAMPLING_RADIUS,
    )
}

/// Line-search constants used on this benchmark: `α = 0.3`, `β = 0.5`,
/// `η_max = 1`, `η_min = 0.05`.
pub fn default_line_search() -> LineSearchParams {
    LineSearchParams {
        alpha: 0.3,
        beta: 0.5,
        eta_min: 0.05,
        eta_max: 1.0,
    }
}

/// Approximate optimum of the true cost: gradient descent with central
/// zeroth-order gradients from `K̂⋆` until the gradient norm drops to `tol`.
/// The result is also stored in `inst.k_star_ref`.
pub fn reference_optimum(inst: &mut LqrInstance, tol: f64) -> Result<Matrix> {
    let mut obj = LqrObjective::new(inst.clone());
    let ls = default_line_search();
    let config = GcConfig {
        gamma: 0.5,
        lipschitz: 0.0,
        ls_model_based: ls,
        ls_model_free: ls.with_eta_min(0.0),
        max_outer_iters: REFERENCE_MAX_ITERS,
        termination_tol: tol,
        termination: Termination::GradientNorm,
        record_steps: false,
    };
    let trace = model_free_solve(&mut obj, inst.k_hat_star.as_slice(), &config)?;
    match trace.stop {
        StopReason::Converged => {}
        StopReason::MaxIters => {
            return Err(Error::MaxItersExceeded {
                iterations: trace.outer_iterations,
            })
        }
        StopReason::Stalled => {
            return Err(Error::NotConverged {
                what: "reference optimum line search",
                iterations: trace.outer_iterations,
                residual: f64::NAN,
            })
        }
    }
    let k = inst.gain_from_flat(&trace.final_point)?;
    inst.k_star_ref = Some(k.clone());
    Ok(k)
}

/// [`CompositeObjective`] over the row-major flattening of `K`. Diverged
/// rollouts evaluate to `+∞` so line searches simply reject them.
#[derive(Clone, Debug)]
pub struct LqrObjective {
    inst: LqrInstance,
    scheme: GradientScheme,
    counter: EvalCounter,
}

impl LqrObjective {
    /// Central-difference exact gradients.
    pub fn new(inst: LqrInstance) -> Self {
        Self {
            inst,
            scheme: GradientScheme::Central,
            counter: EvalCounter::new(),
        }
    }

    pub fn with_scheme(mut self, scheme: GradientScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn instance(&self) -> &LqrInstance {
        &self.inst
    }
}

impl CompositeObjective for LqrObjective {
    fn dim(&self) -> usize {
        self.inst.p * self.inst.n
    }

    fn value(&mut self, x: &[f64]) -> Result<f64> {
        let k = self.inst.gain_from_flat(x)?;
        match empirical_cost(&self.inst, &k, &mut self.counter) {
            Err(Error::Diverged { .. }) => Ok(f64::INFINITY),
            other => other,
        }
    }

    fn exact_gradient(&mut self, x: &[f64], _f_x: f64) -> Result<ExactGradient> {
        let k = self.inst.gain_from_flat(x)?;
        let (g, evals) = zeroth_order_grad(&self.inst, &k, &mut self.counter, self.scheme)?;
        Ok(ExactGradient {
            gradient: g.into_vec(),
            evals,
            oracle_mode: false,
        })
    }

    fn model_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let k = self.inst.gain_from_flat(x)?;
        Ok(model_gradient(&self.inst, &k)?.0.into_vec())
    }

    fn model_value(&self, x: &[f64]) -> Option<f64> {
        model_cost(&self.inst, &self.inst.gain_from_flat(x).ok()?)
    }

    fn evaluations(&self) -> u64 {
        self.counter.get()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlin::lyapunov_residual;

    fn linear_instance(seed: u64) -> LqrInstance {
        make_lqr(&mut Rng::new(seed), 4, 3, 0.0, DEFAULT_HORIZON, DEFAULT_SAMPLING_RADIUS).unwrap()
    }

    /// Gradient of the linear `T`-horizon cost `Σ_{t≤T} tr(W V_t)`, `V_t = A_Kᵗ Σ₀ A_Kᵗᵀ`,
    /// by the adjoint recursion `P_j = W + A_Kᵀ P_{j−1} A_K`:
    /// `2RK Σ_t V_t − 2Bᵀ Σ_{t<T} P_{T−1−t} A_K V_t`.
    fn finite_horizon_gradient(inst: &LqrInstance, k: &Matrix) -> Matrix {
        let ak = inst.closed_loop(k);
        let w = &inst.qc + &(&(&k.transpose() * &inst.rc) * k);
        let t_max = inst.horizon;
        let mut vs = vec![inst.sigma0()];
        for t in 0..t_max {
            vs.push(&(&ak * &vs[t]) * &ak.transpose());
        }
        let mut ps = vec![w.clone()];
        for j in 1..t_max {
            ps.push(&w + &(&(&ak.transpose() * &ps[j - 1]) * &ak));
        }
        let mut vsum = Matrix::zeros(inst.n, inst.n);
        for v in &vs {
            vsum = &vsum + v;
        }
        let mut adj = Matrix::zeros(inst.n, inst.n);
        for t in 0..t_max {
            adj = &adj + &(&(&ps[t_max - 1 - t] * &ak) * &vs[t]);
        }
        &(&(&inst.rc * k) * &vsum).scale(2.0) - &(&inst.b.transpose() * &adj).scale(2.0)
    }

    fn stabilizing_gain(inst: &LqrInstance, rng: &mut Rng) -> Matrix {
        loop {
            let d = gaussian_matrix(rng, inst.p, inst.n).scale(0.05);
            let k = &inst.k_hat_star + &d;
            if spectral_radius(&inst.closed_loop(&k), 1e-12).unwrap() < 0.9 {
                return k;
            }
        }
    }

    #[test]
    fn perturbation_values() {
        let inst = linear_instance(0);
        assert_eq!(h_eval(&inst, &[0.0; 4]), vec![0.0; 4]);
        assert_eq!(h_eval(&inst, &[1.0, -2.0, 3.0, 0.5]), vec![0.0; 4]);
        let h = Perturbation::ScaledSineRational { ell: 0.01 };
        let v = h.apply(&[std::f64::consts::FRAC_PI_2])[0];
        assert!((v - 0.01 * std::f64::consts::FRAC_PI_2 / 0.1).abs() < 1e-12);
        assert!((v - 0.15708).abs() < 1e-5);
        let mut rng = Rng::new(9);
        for _ in 0..100 {
            let x = rng.normal_vec(4).iter().map(|v| v * 5.0).collect::<Vec<_>>();
            assert!(norm(&h.apply(&x)) <= 10.0 * 0.01 * norm(&x) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rollout_of_dead_system() {
        let inst = LqrInstance::from_system(
            Matrix::zeros(2, 2),
            Matrix::zeros(2, 1),
            Matrix::identity(2).scale(2.0),
            Matrix::identity(1),
            0.0,
            5,
            1e-3,
        )
        .unwrap();
        let k = Matrix::from_rows(&[&[0.5, -1.0]]).unwrap();
        let x0 = [1.0, 2.0];
        let r = rollout(&inst, &k, &x0).unwrap();
        let w = &inst.qc + &(&k.transpose() * &k);
        assert!((r.cost - w.quad_form(&x0)).abs() < 1e-14);
        assert_eq!(r.states.len(), 7);
        assert_eq!(r.inputs.len(), 6);
        assert!(r.states[1..].iter().all(|s| s.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn rollout_transitions_are_recomputable() {
        let inst = default_lqr(1).unwrap();
        let r = rollout(&inst, &inst.k_hat_star, &inst.initial_states[2]).unwrap();
        let mut cost = 0.0;
        for t in 0..=inst.horizon {
            let x = &r.states[t];
            let u = &r.inputs[t];
            let ax = inst.a.matvec(x);
            let bu = inst.b.matvec(u);
            let hx = h_eval(&inst, x);
            for i in 0..inst.n {
                assert_eq!(r.states[t + 1][i], ax[i] + bu[i] + hx[i]);
            }
            cost += inst.qc.quad_form(x) + inst.rc.quad_form(u);
        }
        assert_eq!(cost, r.cost);
    }

    #[test]
    fn unstable_gain_diverges() {
        let inst = linear_instance(2);
        let k = Matrix::zeros(3, 4);
        let rho = spectral_radius(&inst.a, 1e-12).unwrap();
        let mut long = inst.clone();
        long.horizon = 20_000;
        if rho > 1.0 {
            assert!(matches!(
                rollout(&long, &k, &inst.initial_states[0]),
                Err(Error::Diverged { .. })
            ));
            let mut obj = LqrObjective::new(long);
            assert_eq!(obj.value(&[0.0; 12]).unwrap(), f64::INFINITY);
            assert_eq!(obj.evaluations(), 1);
        }
    }

    #[test]
    fn zero_initial_states_cost_nothing() {
        let mut inst = default_lqr(0).unwrap();
        inst.initial_states = vec![vec![0.0; 4]; 4];
        let mut c = EvalCounter::new();
        assert_eq!(empirical_cost(&inst, &inst.k_hat_star, &mut c).unwrap(), 0.0);
        assert_eq!(c.get(), 1);
    }

    #[test]
    fn single_state_cost_is_its_rollout() {
        let mut inst = default_lqr(0).unwrap();
        inst.initial_states = vec![vec![0.3, -0.1, 0.2, 0.4]];
        let mut c = EvalCounter::new();
        let cost = empirical_cost(&inst, &inst.k_hat_star, &mut c).unwrap();
        assert_eq!(cost, rollout(&inst, &inst.k_hat_star, &inst.initial_states[0]).unwrap().cost);
    }

    #[test]
    fn linear_cost_matches_lyapunov_value() {
        for seed in 0..5 {
            let inst = linear_instance(seed);
            let k = &inst.k_hat_star;
            let (_, ws) = model_gradient(&inst, k).unwrap();
            let exact = (&ws.p_k * &inst.sigma0()).trace();
            let mut c = EvalCounter::new();
            let emp = empirical_cost(&inst, k, &mut c).unwrap();
            assert!(((emp - exact) / exact).abs() <= 1e-3, "seed {seed}: {emp} vs {exact}");
            assert!((model_cost(&inst, k).unwrap() - exact).abs() <= 1e-12 * exact);
        }
    }

    #[test]
    fn riccati_gain_is_stationary() {
        for seed in 0..5 {
            let inst = linear_instance(seed);
            let (g, ws) = model_gradient(&inst, &inst.k_hat_star).unwrap();
            assert!(ws.e_k.frobenius_norm() <= 1e-8, "seed {seed}: {}", ws.e_k.frobenius_norm());
            assert!(g.frobenius_norm() <= 1e-7);
        }
    }

    #[test]
    fn basis_states_give_scaled_identity() {
        let inst = default_lqr(3).unwrap();
        assert_eq!(inst.sigma0(), Matrix::identity(4).scale(0.25));
    }

    #[test]
    fn workspace_solves_both_lyapunov_equations() {
        let inst = linear_instance(1);
        let mut rng = Rng::new(11);
        let k = stabilizing_gain(&inst, &mut rng);
        let (_, ws) = model_gradient(&inst, &k).unwrap();
        let w = &inst.qc + &(&(&k.transpose() * &inst.rc) * &k);
        assert!(lyapunov_residual(&ws.a_k, &w, &ws.p_k).frobenius_norm() <= 1e-10);
        assert!(lyapunov_residual(&ws.a_k.transpose(), &inst.sigma0(), &ws.sigma_k).frobenius_norm() <= 1e-10);
    }

    #[test]
    fn model_gradient_matches_lyapunov_differences() {
        let inst = linear_instance(4);
        let mut rng = Rng::new(5);
        let k = stabilizing_gain(&inst, &mut rng);
        let (g, _) = model_gradient(&inst, &k).unwrap();
        let h = 1e-6;
        let mut fd = vec![0.0; 12];
        for (j, slot) in fd.iter_mut().enumerate() {
            let mut kp = k.as_slice().to_vec();
            let mut km = kp.clone();
            kp[j] += h;
            km[j] -= h;
            let cp = model_cost(&inst, &inst.gain_from_flat(&kp).unwrap()).unwrap();
            let cm = model_cost(&inst, &inst.gain_from_flat(&km).unwrap()).unwrap();
            *slot = (cp - cm) / (2.0 * h);
        }
        let fd = Matrix::from_row_major(3, 4, fd).unwrap();
        let rel = (&fd - &g).frobenius_norm() / g.frobenius_norm();
        assert!(rel <= 1e-5, "relative error {rel}");
    }

    #[test]
    fn central_gradient_matches_finite_horizon_oracle() {
        for seed in 0..3 {
            let inst = linear_instance(seed);
            let mut rng = Rng::new(100 + seed);
            let k = stabilizing_gain(&inst, &mut rng);
            let mut c = EvalCounter::new();
            let (zo, evals) = zeroth_order_grad(&inst, &k, &mut c, GradientScheme::Central).unwrap();
            assert_eq!(evals, 24);
            assert_eq!(c.get(), 24);
            let oracle = finite_horizon_gradient(&inst, &k);
            let rel = (&zo - &oracle).frobenius_norm() / oracle.frobenius_norm();
            assert!(rel <= 1e-2, "seed {seed}: relative error {rel}");
        }
    }

    #[test]
    fn one_point_gradient_is_scaled_cost() {
        let inst = default_lqr(0).unwrap();
        let k = inst.k_hat_star.clone();
        let mut c = EvalCounter::new();
        let (g, evals) = zeroth_order_grad(&inst, &k, &mut c, GradientScheme::OnePoint).unwrap();
        assert_eq!(evals, 12);
        for j in [0, 7] {
            let mut kp = k.as_slice().to_vec();
            kp[j] += inst.sampling_radius;
            let mut c2 = EvalCounter::new();
            let direct = empirical_cost(&inst, &inst.gain_from_flat(&kp).unwrap(), &mut c2).unwrap();
            assert_eq!(g.as_slice()[j], direct / inst.sampling_radius);
        }
    }

    #[test]
    fn default_instances_generate() {
        for seed in 0..10 {
            let inst = default_lqr(seed).unwrap();
            assert!(spectral_radius(&inst.closed_loop(&inst.k_hat_star), 1e-12).unwrap() < 1.0);
            assert_eq!((inst.n, inst.p, inst.horizon), (4, 3, 50));
        }
    }

    #[test]
    fn linear_reference_is_riccati_gain() {
        let mut inst = linear_instance(0);
        let k = reference_optimum(&mut inst, REFERENCE_TOL).unwrap();
        assert!((&k - &inst.k_hat_star).frobenius_norm() < 1e-3);
        let mut c = EvalCounter::new();
        let (g, _) = zeroth_order_grad(&inst, &k, &mut c, GradientScheme::Central).unwrap();
        assert!(g.frobenius_norm() < REFERENCE_TOL);
    }
}
