//! Closed-form rate diagnostics: the linear-rate bound of the model-based
//! regime, the guaranteed episode length `N_min`, bounded-direction constants
//! for quadratic models, and per-evaluation progress of the two regimes.

use crate::error::{Error, Result};
use crate::matlin::{symmetric_extreme_eigenvalues, Matrix};

const NMIN_SCAN_LIMIT: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateDiagnostics {
    /// PL constant of `f`.
    pub mu: f64,
    /// Smoothness constant of `f`.
    pub l_f: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub l_r: f64,
}

impl RateDiagnostics {
    /// `1 − 2μαγ²η_min`, clamped at zero.
    pub fn model_based_factor(&self) -> f64 {
        (1.0 - 2.0 * self.mu * self.alpha * self.gamma * self.gamma * self.eta_min).max(0.0)
    }
}

/// `(1 − 2μαγ²η_min)^N · gap0`
pub fn prop2_bound(diag: &RateDiagnostics, n: u32, gap0: f64) -> f64 {
    diag.model_based_factor().powi(n as i32) * gap0
}

/// Largest `N` for which monitored steps are guaranteed to keep the
/// sufficient-decrease property:
///
/// * `κ_max ≠ 1`: `log|κ_maxᴺ − 1| + N log(1/κ_min) ≤ log((1−γ)/(γ η_max L_r)) + log|κ_max − 1|`
/// * `κ_max = 1`: `log N + N log(1/κ_min) ≤ log((1−γ)/(γ η_max L_r))`
///
/// Found by scanning `N = 1, 2, …`; both left-hand sides increase with `N`.
/// Returns 0 when `N = 1` already fails.
pub fn nmin_bound(diag: &RateDiagnostics) -> Result<u64> {
    let RateDiagnostics {
        kappa_min,
        kappa_max,
        gamma,
        eta_max,
        l_r,
        ..
    } = *diag;
    if !(kappa_min > 0.0 && kappa_min < 1.0 && kappa_max > kappa_min) {
        return Err(Error::InvalidRegime(format!(
            "need 0 < kappa_min < 1 and kappa_max > kappa_min, got ({kappa_min}, {kappa_max})"
        )));
    }
    if !(gamma > 0.0 && gamma < 1.0 && eta_max > 0.0 && l_r > 0.0) {
        return Err(Error::InvalidParameter(
            "N_min needs gamma in (0, 1) and positive eta_max, L_r".into(),
        ));
    }
    let budget = ((1.0 - gamma) / (gamma * eta_max * l_r)).ln();
    let growth = (1.0 / kappa_min).ln();
    let lhs = |n: u64| -> f64 {
        let nf = n as f64;
        if kappa_max == 1.0 {
            nf.ln() + nf * growth
        } else {
            (kappa_max.powf(nf) - 1.0).abs().ln() + nf * growth
        }
    };
    let rhs = if kappa_max == 1.0 {
        budget
    } else {
        budget + (kappa_max - 1.0).abs().ln()
    };
    let mut best = 0;
    for n in 1..=NMIN_SCAN_LIMIT {
        if lhs(n) <= rhs {
            best = n;
        } else {
            break;
        }
    }
    Ok(best)
}

/// `κ_max = 1 − η_min λ_min(P)`, `κ_min = 1 − η_max λ_max(P)` for the quadratic
/// model direction `g̃(x) = Px + δ`.
pub fn bounded_direction_constants(p: &Matrix, eta_min: f64, eta_max: f64) -> Result<(f64, f64)> {
    let (lo, hi) = symmetric_extreme_eigenvalues(p)?;
    if !(lo > 0.0) {
        return Err(Error::InvalidRegime(format!("P is not positive definite (lambda_min = {lo})")));
    }
    let kappa_max = 1.0 - eta_min * lo;
    let kappa_min = 1.0 - eta_max * hi;
    if !(kappa_min > 0.0) {
        return Err(Error::InvalidRegime(format!(
            "eta_max = {eta_max} is not below 1/lambda_max(P) = {}",
            1.0 / hi
        )));
    }
    Ok((kappa_min, kappa_max))
}

/// Progress per function evaluation, `(|log(1 − 2μαγ²η_min)| / m_max, |log(1 − μ/L_f)| / n)`:
/// a lower bound for the model-based regime and an upper bound for the model-free one.
pub fn progress_per_eval(diag: &RateDiagnostics, m_max: u64, n: usize) -> Result<(f64, f64)> {
    let mb = 1.0 - 2.0 * diag.mu * diag.alpha * diag.gamma * diag.gamma * diag.eta_min;
    let mf = 1.0 - diag.mu / diag.l_f;
    if !(mb > 0.0 && mb < 1.0 && mf > 0.0 && mf < 1.0) || m_max == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "rate factors must lie in (0, 1) (got {mb}, {mf}) with positive m_max and n"
        )));
    }
    Ok((mb.ln().abs() / m_max as f64, mf.ln().abs() / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag() -> RateDiagnostics {
        RateDiagnostics {
            mu: 1.0,
            l_f: 10.0,
            kappa_min: 0.9,
            kappa_max: 1.0,
            alpha: 0.3,
            gamma: 0.5,
            eta_min: 0.005,
            eta_max: 1.0,
            l_r: 0.1,
        }
    }

    #[test]
    fn prop2_values() {
        let d = diag();
        assert_eq!(prop2_bound(&d, 0, 2.5), 2.5);
        // (1 − 2·1·0.3·0.25·0.005)^100 = 0.99925^100
        let expect = 0.99925f64.powi(100);
        assert!((prop2_bound(&d, 100, 1.0) - expect).abs() < 1e-15);
        assert!((expect - 0.92772).abs() < 1e-5);
        let mut prev = f64::INFINITY;
        for n in 0..50 {
            let b = prop2_bound(&d, n, 1.0);
            assert!(b <= prev);
            prev = b;
        }
    }

    #[test]
    fn prop2_clamps_large_steps() {
        let d = RateDiagnostics { eta_min: 100.0, ..diag() };
        assert_eq!(prop2_bound(&d, 3, 1.0), 0.0);
    }

    #[test]
    fn nmin_reference_scan() {
        // ln5 + 5·ln(1/0.9) = 2.136 ≤ ln10 = 2.3026 < ln6 + 6·ln(1/0.9) = 2.424
        assert_eq!(nmin_bound(&diag()).unwrap(), 5);
    }

    #[test]
    fn nmin_non_increasing_in_l_r() {
        let vals: Vec<u64> = [0.01, 0.1, 1.0, 10.0]
            .iter()
            .map(|&l_r| nmin_bound(&RateDiagnostics { l_r, ..diag() }).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[0] >= w[1]), "{vals:?}");
        // (1−γ)/(γ η_max L_r) = 0.1 < 1: even N = 1 fails.
        assert_eq!(vals[3], 0);
    }

    #[test]
    fn nmin_general_branch() {
        let d = RateDiagnostics {
            kappa_max: 0.99,
            ..diag()
        };
        let n = nmin_bound(&d).unwrap();
        let lhs = |n: f64| (0.99f64.powf(n) - 1.0).abs().ln() + n * (1.0f64 / 0.9).ln();
        let rhs = 10f64.ln() + 0.01f64.ln();
        assert!(lhs(n as f64) <= rhs && lhs(n as f64 + 1.0) > rhs);
    }

    #[test]
    fn example_four_constants() {
        let (kmin, kmax) = bounded_direction_constants(&Matrix::from_diag(&[1.0]), 0.01, 0.6).unwrap();
        assert!((kmax - 0.99).abs() < 1e-15);
        assert!((kmin - 0.4).abs() < 1e-15);
    }

    #[test]
    fn identity_constants() {
        let (kmin, kmax) = bounded_direction_constants(&Matrix::identity(3), 0.1, 0.5).unwrap();
        assert!((kmin - 0.5).abs() < 1e-15 && (kmax - 0.9).abs() < 1e-15);
    }

    #[test]
    fn step_beyond_inverse_curvature_is_invalid() {
        let p = Matrix::from_diag(&[1.0, 4.0]);
        assert!(matches!(
            bounded_direction_constants(&p, 0.01, 0.25),
            Err(Error::InvalidRegime(_))
        ));
    }

    #[test]
    fn progress_values() {
        let d = diag();
        let (mb, _) = progress_per_eval(&d, 9, 4).unwrap();
        assert!((mb - 0.99925f64.ln().abs() / 9.0).abs() < 1e-18);
        assert!((mb - 8.336e-5).abs() < 1e-8);
        let (_, mf4) = progress_per_eval(&d, 9, 4).unwrap();
        let (_, mf8) = progress_per_eval(&d, 9, 8).unwrap();
        assert!((mf4 - 2.0 * mf8).abs() < 1e-15);
        let sym = RateDiagnostics {
            mu: 0.5,
            l_f: 1.0,
            alpha: 0.5,
            gamma: 1.0,
            eta_min: 1.0,
            ..d
        };
        let (a, b) = progress_per_eval(&sym, 1, 1).unwrap();
        assert_eq!(a, b);
    }
}
