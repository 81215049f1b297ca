use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::eigen::symmetric_eigenvalues;
use super::matrix::{dot, Matrix};
use crate::error::{Error, Result};

const SPD_MAX_ATTEMPTS: usize = 100;
const SPD_MIN_EIGENVALUE: f64 = 1e-8;

/// Seeded generator backed by ChaCha8 (`rand_chacha`), whose output stream is
/// fixed by the seed on every platform.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn normal_vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.standard_normal()).collect()
    }
}

/// Matrix with i.i.d. standard-normal entries, filled in row-major order.
pub fn gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let data = rng.normal_vec(rows * cols);
    Matrix::from_row_major(rows, cols, data).expect("gaussian entries are finite")
}

/// `MᵀM` for a Gaussian `M`, resampled until positive definite.
pub fn random_spd(rng: &mut Rng, n: usize) -> Result<Matrix> {
    for _ in 0..SPD_MAX_ATTEMPTS {
        let m = gaussian_matrix(rng, n, n);
        let p = &m.transpose() * &m;
        let smallest = symmetric_eigenvalues(&p)?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if smallest > SPD_MIN_EIGENVALUE {
            return Ok(p);
        }
    }
    Err(Error::GenerationFailed {
        attempts: SPD_MAX_ATTEMPTS,
        reason: "random square root never produced a positive definite product".into(),
    })
}

/// Random orthogonal matrix from modified Gram–Schmidt on the columns of a
/// Gaussian matrix.
pub fn random_orthogonal(rng: &mut Rng, n: usize) -> Result<Matrix> {
    for _ in 0..SPD_MAX_ATTEMPTS {
        let g = gaussian_matrix(rng, n, n);
        let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| g[(i, j)]).collect()).collect();
        let mut ok = true;
        for j in 0..n {
            for k in 0..j {
                let proj = dot(&cols[j], &cols[k]);
                let basis = cols[k].clone();
                for (c, b) in cols[j].iter_mut().zip(&basis) {
                    *c -= proj * b;
                }
            }
            let len = dot(&cols[j], &cols[j]).sqrt();
            if len < 1e-10 {
                ok = false;
                break;
            }
            cols[j].iter_mut().for_each(|c| *c /= len);
        }
        if ok {
            let mut v = Matrix::zeros(n, n);
            for (j, col) in cols.iter().enumerate() {
                for (i, &c) in col.iter().enumerate() {
                    v[(i, j)] = c;
                }
            }
            return Ok(v);
        }
    }
    Err(Error::GenerationFailed {
        attempts: SPD_MAX_ATTEMPTS,
        reason: "gaussian matrix kept losing rank".into(),
    })
}

/// `V Λ Vᵀ` with `V` random orthogonal and `Λ` uniform on `(0, radius]`, the
/// largest entry pinned to `radius`.
pub fn random_spd_with_spectral_radius(rng: &mut Rng, n: usize, radius: f64) -> Result<Matrix> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("spectral radius must be positive, got {radius}")));
    }
    let v = random_orthogonal(rng, n)?;
    let mut lambda: Vec<f64> = (0..n).map(|_| radius * (1.0 - rng.uniform())).collect();
    let argmax = lambda
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    lambda[argmax] = radius;
    let q = &(&v * &Matrix::from_diag(&lambda)) * &v.transpose();
    Ok(q.symmetrized())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_matrix() {
        let a = gaussian_matrix(&mut Rng::new(7), 2, 2);
        let b = gaussian_matrix(&mut Rng::new(7), 2, 2);
        assert_eq!(a, b);
        assert_ne!(a, gaussian_matrix(&mut Rng::new(8), 2, 2));
    }

    #[test]
    fn shape_contract() {
        let m = gaussian_matrix(&mut Rng::new(0), 3, 4);
        assert_eq!((m.rows(), m.cols()), (3, 4));
    }

    #[test]
    fn sample_moments_of_a_long_column() {
        // With 1000 samples the standard error of the mean is ~0.032 and that of
        // the variance is ~0.045; the bounds sit at more than four of either.
        let m = gaussian_matrix(&mut Rng::new(2024), 1000, 1);
        let v = m.as_slice();
        let mean = v.iter().sum::<f64>() / 1000.0;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 999.0;
        assert!(mean.abs() < 0.15, "mean {mean}");
        assert!(var > 0.8 && var < 1.2, "variance {var}");
    }

    #[test]
    fn scalar_spd_is_a_square() {
        let mut a = Rng::new(3);
        let m = gaussian_matrix(&mut a.clone(), 1, 1)[(0, 0)];
        let p = random_spd(&mut a, 1).unwrap();
        assert_eq!(p[(0, 0)], m * m);
    }

    #[test]
    fn spd_is_symmetric_and_positive() {
        let mut rng = Rng::new(11);
        for n in 1..6 {
            let p = random_spd(&mut rng, n).unwrap();
            assert_eq!(p.asymmetry(), 0.0);
            for _ in 0..20 {
                let x = rng.normal_vec(n);
                assert!(p.quad_form(&x) > 0.0);
            }
        }
    }

    #[test]
    fn scalar_spectral_radius_matrix() {
        let q = random_spd_with_spectral_radius(&mut Rng::new(1), 1, 10.0).unwrap();
        assert!((q[(0, 0)] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_factor_is_orthogonal() {
        let v = random_orthogonal(&mut Rng::new(5), 5).unwrap();
        let err = (&(&v.transpose() * &v) - &Matrix::identity(5)).max_abs();
        assert!(err < 1e-12);
    }

    #[test]
    fn rejects_non_positive_radius() {
        assert!(random_spd_with_spectral_radius(&mut Rng::new(1), 3, 0.0).is_err());
    }
}
