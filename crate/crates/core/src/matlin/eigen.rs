use super::matrix::Matrix;
use crate::error::{Error, Result};

const JACOBI_MAX_SWEEPS: usize = 100;
const RADIUS_MAX_SQUARINGS: usize = 64;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
/// Only the symmetric part of `m` is used.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("eigenvalues of a non-square matrix".into()));
    }
    let n = m.rows();
    let mut a = m.symmetrized();
    let total = a.frobenius_norm();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total || off == 0.0 {
            let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
            eig.sort_by(f64::total_cmp);
            return Ok(eig);
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(Error::NotConverged {
        what: "jacobi eigenvalue sweep",
        iterations: JACOBI_MAX_SWEEPS,
        residual: f64::NAN,
    })
}

/// `(λ_min, λ_max)` of a symmetric matrix.
pub fn symmetric_extreme_eigenvalues(m: &Matrix) -> Result<(f64, f64)> {
    let eig = symmetric_eigenvalues(m)?;
    Ok((eig[0], eig[eig.len() - 1]))
}

/// Spectral radius estimate `‖M^k‖_F^{1/k}` with `k = 2^s`, computed by repeated
/// normalized squaring (power iteration on the matrix itself) until successive
/// estimates agree to relative `tol`.
///
/// Every estimate is an upper bound on the true radius and the sequence is
/// non-increasing, so complex-dominant and defective matrices are handled
/// without a separate eigen-decomposition.
pub fn spectral_radius(m: &Matrix, tol: f64) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("spectral radius of a non-square matrix".into()));
    }
    let mut power = m.clone();
    // log ‖M^{2^s}‖ is tracked separately so the iterate stays at unit norm.
    let mut log_scale = 0.0_f64;
    let mut previous = f64::INFINITY;
    for s in 0..RADIUS_MAX_SQUARINGS {
        let nrm = power.frobenius_norm();
        if nrm == 0.0 {
            return Ok(0.0);
        }
        power = power.scale(1.0 / nrm);
        log_scale += nrm.ln();
        let estimate = (log_scale / 2f64.powi(s as i32)).exp();
        if (previous - estimate).abs() <= tol * estimate {
            return Ok(estimate);
        }
        previous = estimate;
        power = &power * &power;
        log_scale *= 2.0;
    }
    Err(Error::NotConverged {
        what: "spectral radius",
        iterations: RADIUS_MAX_SQUARINGS,
        residual: previous,
    })
}
