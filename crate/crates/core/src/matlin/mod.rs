//! Small dense linear algebra: the matrix type, seeded random constructors,
//! symmetric eigenvalues, spectral radius, and the Lyapunov / Riccati solvers.

mod eigen;
mod equations;
mod matrix;
mod random;

pub use eigen::{spectral_radius, symmetric_eigenvalues, symmetric_extreme_eigenvalues};
pub use equations::{
    lyapunov_residual, riccati_map, solve_dare, solve_discrete_lyapunov, DareSolution, DEFAULT_MAX_ITER,
    LYAPUNOV_TOL, RICCATI_TOL,
};
pub use matrix::{axpy_step, distance, dot, norm, Matrix};
pub use random::{gaussian_matrix, random_orthogonal, random_spd, random_spd_with_spectral_radius, Rng};
