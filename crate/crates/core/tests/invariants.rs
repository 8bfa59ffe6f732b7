//! Randomized invariants of the kernels.

use leverage::gen::{gaussian_matrix, gen_randsvd, random_orthonormal, RngState};
use leverage::linalg::{householder_qr, up};
use leverage::{leverage_from_basis, leverage_qr, leverage_svd, principal_angles, Matrix};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = (usize, usize, u64)> {
    (1usize..8, 0usize..30, any::<u64>()).prop_map(|(n, extra, seed)| (n + extra, n, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qr_reconstructs_and_is_orthonormal((m, n, seed) in shape()) {
        let a = gaussian_matrix(m, n, &mut RngState::new(seed));
        let qr = householder_qr(&a).unwrap();
        let res = (&(&qr.q * &qr.r) - &a).frobenius_norm();
        prop_assert!(res <= 1e-13 * a.frobenius_norm());
        prop_assert!(qr.q.gram_residual() < 1e-13);
        for k in 0..n {
            prop_assert!(qr.r[(k, k)] >= 0.0);
            for i in k + 1..n {
                prop_assert_eq!(qr.r[(i, k)], 0.0);
            }
        }
    }

    #[test]
    fn up_of_symmetric_recovers_it(n in 1usize..8, seed in any::<u64>()) {
        let g = gaussian_matrix(n, n, &mut RngState::new(seed));
        let s = &g + &g.transpose();
        let u = up(&s).unwrap();
        let back = &u + &u.transpose();
        prop_assert!((&back - &s).max_abs() < 1e-14);
    }

    #[test]
    fn leverage_axioms_and_basis_independence(
        (m, n, seed) in shape(),
        log_kappa in 0.0f64..6.0,
    ) {
        let mut rng = RngState::new(seed);
        let a = gen_randsvd(m, n, 10f64.powf(log_kappa), &mut rng).unwrap();
        let lev = leverage_qr(&a).unwrap();
        prop_assert!((lev.sum() - n as f64).abs() < 1e-12 * n as f64 + 1e-13);
        prop_assert!(lev.iter().all(|l| (-1e-13..=1.0 + 1e-13).contains(&l)));
        let svd = leverage_svd(&a).unwrap();
        for (x, y) in lev.iter().zip(svd.iter()) {
            prop_assert!((x - y).abs() < 1e-11);
        }
        let rot = random_orthonormal(n, n, &mut rng).unwrap();
        let q = householder_qr(&a).unwrap().q;
        let rotated = leverage_from_basis(&(&q * &rot)).unwrap();
        for (x, y) in lev.iter().zip(rotated.iter()) {
            prop_assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn principal_angles_are_symmetric((m, n, seed) in shape()) {
        let mut rng = RngState::new(seed);
        let q1 = random_orthonormal(m, n, &mut rng).unwrap();
        let q2 = random_orthonormal(m, n, &mut rng).unwrap();
        let a = principal_angles(&q1, &q2).unwrap();
        let b = principal_angles(&q2, &q1).unwrap();
        for (x, y) in a.sines.iter().zip(&b.sines) {
            prop_assert!((x - y).abs() < 1e-13);
        }
        prop_assert!(a.sines.iter().all(|s| (0.0..=1.0).contains(s)));
        let same = principal_angles(&q1, &q1).unwrap();
        prop_assert!(same.sin_theta_max_angle() < 1e-14);
    }
}

#[test]
fn rank_deficient_input_is_an_error() {
    let a = Matrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]).unwrap();
    assert!(leverage_qr(&a).is_err());
}
