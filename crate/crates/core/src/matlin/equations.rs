//! Fixed-point solvers for the discrete Lyapunov and algebraic Riccati equations.

use super::eigen::spectral_radius;
use super::matrix::Matrix;
use crate::error::{Error, Result};

pub const LYAPUNOV_TOL: f64 = 1e-12;
pub const RICCATI_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

const RADIUS_TOL: f64 = 1e-12;
const REFINEMENT_PASSES: usize = 4;
const HEWER_POLISH_STEPS: usize = 3;

/// `Aᵀ X A − X + W`
pub fn lyapunov_residual(acl: &Matrix, w: &Matrix, x: &Matrix) -> Matrix {
    &(&(&acl.transpose() * x) * acl) - x + w
}

/// Solves `Aclᵀ X Acl − X + W = 0` for `X`.
///
/// The fixed point `X ← Aclᵀ X Acl + W` is summed with doubling
/// (`X ← X + A_kᵀ X A_k`, `A_k ← A_k²`), then polished by re-solving for the
/// correction driven by the remaining residual. `max_iter` bounds the number of
/// doubling steps per pass.
///
/// The state-covariance equation `Σ = Σ₀ + A Σ Aᵀ` is this solver applied to
/// `Aᵀ`.
pub fn solve_discrete_lyapunov(acl: &Matrix, w: &Matrix, tol: f64, max_iter: usize) -> Result<Matrix> {
    let n = acl.rows();
    if !acl.is_square() || w.rows() != n || w.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "lyapunov with {}x{} closed loop and {}x{} weight",
            acl.rows(),
            acl.cols(),
            w.rows(),
            w.cols()
        )));
    }
    let radius = spectral_radius(acl, RADIUS_TOL)?;
    if radius >= 1.0 {
        return Err(Error::SpectralRadius { radius });
    }

    let mut x = doubling_sum(acl, w, max_iter)?;
    let mut residual = lyapunov_residual(acl, w, &x);
    for _ in 0..REFINEMENT_PASSES {
        if residual.frobenius_norm() <= tol {
            break;
        }
        let correction = doubling_sum(acl, &residual.symmetrized(), max_iter)?;
        x = &x + &correction;
        residual = lyapunov_residual(acl, w, &x);
    }
    let x = x.symmetrized();
    let res = lyapunov_residual(acl, w, &x).frobenius_norm();
    if res > tol {
        return Err(Error::NotConverged {
            what: "discrete lyapunov",
            iterations: max_iter,
            residual: res,
        });
    }
    Ok(x)
}

fn doubling_sum(acl: &Matrix, w: &Matrix, max_iter: usize) -> Result<Matrix> {
    let mut x = w.clone();
    let mut a = acl.clone();
    for _ in 0..max_iter {
        let increment = &(&a.transpose() * &x) * &a;
        let inc_norm = increment.frobenius_norm();
        x = &x + &increment;
        let x_norm = x.frobenius_norm();
        if !x_norm.is_finite() {
            return Err(Error::SpectralRadius { radius: f64::NAN });
        }
        if inc_norm <= f64::EPSILON * 1e-3 * x_norm {
            return Ok(x);
        }
        a = &a * &a;
    }
    Err(Error::NotConverged {
        what: "lyapunov doubling",
        iterations: max_iter,
        residual: f64::NAN,
    })
}

/// Solution of the discrete algebraic Riccati equation together with the
/// optimal gain `K = (R + BᵀPB)⁻¹ BᵀPA`.
#[derive(Clone, Debug)]
pub struct DareSolution {
    pub p: Matrix,
    pub gain: Matrix,
    pub iterations: usize,
}

fn riccati_gain(a: &Matrix, b: &Matrix, r: &Matrix, p: &Matrix) -> Result<Matrix> {
    let bt_p = &b.transpose() * p;
    let lhs = r + &(&bt_p * b);
    lhs.solve(&(&bt_p * a))
}

/// One application of `P ↦ Q + AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA`.
pub fn riccati_map(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, p: &Matrix) -> Result<Matrix> {
    let gain = riccati_gain(a, b, r, p)?;
    let at_p = &a.transpose() * p;
    let next = &(q + &(&at_p * a)) - &(&(&at_p * b) * &gain);
    Ok(next.symmetrized())
}

/// Value iteration on the Riccati map from `P = Q` until successive iterates
/// differ by at most `tol` (Frobenius), followed by a few Newton (Hewer) steps
/// that drive the gain's Lyapunov cost to the same fixed point.
pub fn solve_dare(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    tol: f64,
    max_iter: usize,
) -> Result<DareSolution> {
    let n = a.rows();
    let m = b.cols();
    if !a.is_square() || b.rows() != n || q.rows() != n || q.cols() != n || r.rows() != m || r.cols() != m {
        return Err(Error::DimensionMismatch("riccati system shapes disagree".into()));
    }
    let mut p = q.clone();
    let mut iterations = 0;
    loop {
        if iterations >= max_iter {
            return Err(Error::NotConverged {
                what: "riccati value iteration",
                iterations,
                residual: f64::NAN,
            });
        }
        let next = riccati_map(a, b, q, r, &p)?;
        iterations += 1;
        let change = (&next - &p).frobenius_norm();
        if !change.is_finite() {
            return Err(Error::NotConverged {
                what: "riccati value iteration",
                iterations,
                residual: change,
            });
        }
        p = next;
        if change <= tol {
            break;
        }
    }

    let mut gain = riccati_gain(a, b, r, &p)?;
    let closed = |k: &Matrix| a - &(b * k);
    let radius = spectral_radius(&closed(&gain), RADIUS_TOL)?;
    if radius >= 1.0 {
        return Err(Error::NotStabilizable { radius });
    }
    for _ in 0..HEWER_POLISH_STEPS {
        let acl = closed(&gain);
        let weight = q + &(&(&gain.transpose() * r) * &gain);
        let tol_scaled = LYAPUNOV_TOL * weight.frobenius_norm().max(1.0) * 1e3;
        let Ok(pk) = solve_discrete_lyapunov(&acl, &weight, tol_scaled, max_iter) else {
            break;
        };
        let next_gain = riccati_gain(a, b, r, &pk)?;
        if spectral_radius(&closed(&next_gain), RADIUS_TOL)? >= 1.0 {
            break;
        }
        p = pk;
        gain = next_gain;
    }
    Ok(DareSolution { p, gain, iterations })
}
