//! Kernels checked against nalgebra on seeded inputs.

use leverage::bounds::{delta_q_exact, delta_q_first_order, rdot_rinv};
use leverage::gen::{gaussian_matrix, gen_randsvd, RngState};
use leverage::linalg::{householder_qr, jacobi_svd, two_norm};
use leverage::{leverage_qr, leverage_svd, principal_angles, sin_theta_max_projector, Matrix};
use nalgebra::{DMatrix, SymmetricEigen};

fn to_na(a: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)])
}

fn from_na(a: &DMatrix<f64>) -> Matrix {
    Matrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// R factor from nalgebra with the diagonal made nonnegative.
fn na_r(a: &Matrix) -> DMatrix<f64> {
    let mut r = to_na(a).qr().r();
    for k in 0..r.nrows() {
        if r[(k, k)] < 0.0 {
            r.row_mut(k).neg_mut();
        }
    }
    r
}

fn na_q(a: &Matrix) -> DMatrix<f64> {
    let qr = to_na(a).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..r.nrows() {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

#[test]
fn singular_values_match_gram_eigenvalues() {
    let mut rng = RngState::new(3);
    let a = gaussian_matrix(6, 3, &mut rng);
    let na = to_na(&a);
    let mut eig: Vec<f64> = SymmetricEigen::new(na.transpose() * &na)
        .eigenvalues
        .iter()
        .map(|l| l.sqrt())
        .collect();
    eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let svd = jacobi_svd(&a).unwrap();
    for (s, e) in svd.sigma.iter().zip(&eig) {
        assert!((s - e).abs() <= 1e-12 * eig[0], "{s} vs {e}");
    }
    let res = (&svd.reconstruct() - &a).frobenius_norm();
    assert!(res < 1e-13 * a.frobenius_norm());
}

#[test]
fn singular_values_match_nalgebra_on_ill_conditioned() {
    let mut rng = RngState::new(4);
    let a = gen_randsvd(200, 12, 1e8, &mut rng).unwrap();
    let mut na: Vec<f64> = to_na(&a).singular_values().iter().copied().collect();
    na.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let ours = jacobi_svd(&a).unwrap().sigma;
    for (s, e) in ours.iter().zip(&na) {
        assert!((s - e).abs() <= 1e-6 * e, "{s} vs {e}");
    }
    assert!((ours[0] / ours[11] / 1e8 - 1.0).abs() < 1e-6);
}

#[test]
fn qr_factors_match_nalgebra() {
    let mut rng = RngState::new(5);
    let a = gaussian_matrix(40, 7, &mut rng);
    let qr = householder_qr(&a).unwrap();
    let dr = (&qr.r - &from_na(&na_r(&a))).max_abs();
    let dq = (&qr.q - &from_na(&na_q(&a))).max_abs();
    assert!(dr < 1e-12 * a.max_abs(), "{dr}");
    assert!(dq < 1e-12, "{dq}");
}

#[test]
fn leverage_matches_hat_matrix_diagonal() {
    let mut rng = RngState::new(6);
    let a = gen_randsvd(30, 5, 1e3, &mut rng).unwrap();
    let na = to_na(&a);
    let hat = &na * (na.transpose() * &na).try_inverse().unwrap() * na.transpose();
    let lev = leverage_qr(&a).unwrap();
    let lev_svd = leverage_svd(&a).unwrap();
    for i in 0..30 {
        assert!((lev.values[i] - hat[(i, i)]).abs() < 1e-10);
        assert!((lev.values[i] - lev_svd.values[i]).abs() < 1e-13);
    }
}

#[test]
fn angles_match_nalgebra_and_projector() {
    let mut rng = RngState::new(7);
    let a = gaussian_matrix(25, 4, &mut rng);
    let e = gaussian_matrix(25, 4, &mut rng).scaled(1e-3);
    let (q, qt) = (na_q(&a), na_q(&(&a + &e)));
    let mut cos: Vec<f64> = (q.transpose() * &qt)
        .singular_values()
        .iter()
        .copied()
        .collect();
    cos.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let ang = principal_angles(&from_na(&q), &from_na(&qt)).unwrap();
    for (c, o) in ang.cosines.iter().zip(&cos) {
        assert!((c - o).abs() < 1e-14);
    }
    let proj = (DMatrix::identity(25, 25) - &q * q.transpose()) * &qt;
    let s_na = proj.singular_values().max();
    let s_proj = sin_theta_max_projector(&from_na(&q), &from_na(&qt)).unwrap();
    assert!((ang.sin_theta_max_angle() - s_na).abs() < 1e-14);
    assert!((s_proj - s_na).abs() < 1e-14);
}

#[test]
fn rdot_rinv_matches_central_difference() {
    let mut rng = RngState::new(8);
    let a = gen_randsvd(50, 6, 1e2, &mut rng).unwrap();
    let g = gaussian_matrix(50, 6, &mut rng);
    let d = g.scaled(a.frobenius_norm() / g.frobenius_norm());
    let eps_f = d.frobenius_norm() / a.frobenius_norm();
    let rr = rdot_rinv(&a, &d).unwrap();
    let r_inv = na_r(&a).try_inverse().unwrap();
    let t = 1e-6;
    let fd = (na_r(&(&a + &d.scaled(t))) - na_r(&(&a - &d.scaled(t)))) / (2.0 * t) * r_inv;
    let ours = rr.matrix.scaled(eps_f);
    let err = (&ours - &from_na(&fd)).frobenius_norm() / ours.frobenius_norm();
    assert!(err < 1e-6, "{err}");
    assert!(rr.fro_norm <= rr.bound);
}

#[test]
fn first_order_dq_residual_is_quadratic() {
    let mut rng = RngState::new(9);
    let a = gen_randsvd(80, 5, 1e2, &mut rng).unwrap();
    let g = gaussian_matrix(80, 5, &mut rng);
    let d = g.scaled(a.frobenius_norm() / g.frobenius_norm());
    let resid = |t: f64| {
        let dt = d.scaled(t);
        let exact = &from_na(&na_q(&(&a + &dt))) - &from_na(&na_q(&a));
        let ours = delta_q_exact(&a, &dt).unwrap();
        assert!((&exact - &ours).max_abs() < 1e-12);
        two_norm(&(&exact - &delta_q_first_order(&a, &dt).unwrap())).unwrap()
    };
    let ratio = resid(1e-3) / resid(1e-4);
    assert!((70.0..130.0).contains(&ratio), "{ratio}");
}
