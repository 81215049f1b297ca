//! Linear-algebra results checked against nalgebra.

use gradcomp::lqrenv::default_lqr;
use gradcomp::matlin::{
    gaussian_matrix, random_spd, random_spd_with_spectral_radius, solve_dare, solve_discrete_lyapunov,
    spectral_radius, symmetric_eigenvalues, Matrix, Rng,
};
use nalgebra::DMatrix;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn na_spectral_radius(m: &Matrix) -> f64 {
    to_na(m).complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn symmetric_spectrum_matches() {
    let mut rng = Rng::new(11);
    for n in [1, 2, 4, 7] {
        let p = random_spd(&mut rng, n).unwrap();
        let mut ours = symmetric_eigenvalues(&p).unwrap();
        let mut theirs: Vec<f64> = to_na(&p).symmetric_eigen().eigenvalues.iter().copied().collect();
        ours.sort_by(f64::total_cmp);
        theirs.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() <= 1e-10 * theirs.last().unwrap().abs().max(1.0), "{ours:?} vs {theirs:?}");
        }
    }
}

#[test]
fn pinned_spectral_radius() {
    let mut rng = Rng::new(3);
    let q = random_spd_with_spectral_radius(&mut rng, 5, 10.0).unwrap();
    let top = to_na(&q).symmetric_eigen().eigenvalues.max();
    assert!((top - 10.0).abs() < 1e-10);
}

#[test]
fn nonsymmetric_spectral_radius_matches() {
    let mut rng = Rng::new(5);
    for _ in 0..20 {
        let a = gaussian_matrix(&mut rng, 4, 4).scale(0.6);
        let ours = spectral_radius(&a, 1e-12).unwrap();
        let theirs = na_spectral_radius(&a);
        assert!((ours - theirs).abs() < 1e-8 * theirs.max(1.0), "{ours} vs {theirs}");
    }
}

#[test]
fn lyapunov_solution_matches_kronecker_solve() {
    let mut rng = Rng::new(8);
    let n = 4;
    let a = loop {
        let a = gaussian_matrix(&mut rng, n, n).scale(0.4);
        if na_spectral_radius(&a) < 0.95 {
            break a;
        }
    };
    let w = random_spd(&mut rng, n).unwrap();
    let x = solve_discrete_lyapunov(&a, &w, 1e-12, 10_000).unwrap();
    // vec(X) = (I − Aᵀ⊗Aᵀ)⁻¹ vec(W)
    let at = to_na(&a).transpose();
    let lhs = DMatrix::identity(n * n, n * n) - at.kronecker(&at);
    let rhs = DMatrix::from_column_slice(n * n, 1, to_na(&w).as_slice());
    let sol = lhs.lu().solve(&rhs).unwrap();
    let expect = DMatrix::from_column_slice(n, n, sol.as_slice());
    assert!((to_na(&x) - &expect).norm() < 1e-9 * expect.norm());
}

#[test]
fn riccati_gain_is_stabilizing_fixed_point() {
    let inst = default_lqr(4).unwrap();
    let sol = solve_dare(&inst.a, &inst.b, &inst.qc, &inst.rc, 1e-12, 100_000).unwrap();
    let (a, b, q, r, p) = (to_na(&inst.a), to_na(&inst.b), to_na(&inst.qc), to_na(&inst.rc), to_na(&sol.p));
    let btpb = &r + b.transpose() * &p * &b;
    let k = btpb.clone().lu().solve(&(b.transpose() * &p * &a)).unwrap();
    let next = &q + a.transpose() * &p * &a - a.transpose() * &p * &b * &k;
    assert!((&next - &p).norm() < 1e-8 * p.norm());
    assert!((&k - to_na(&sol.gain)).norm() < 1e-8 * k.norm().max(1.0));
    let acl = &a - &b * &k;
    assert!(acl.complex_eigenvalues().iter().all(|z| z.norm() < 1.0));
}
