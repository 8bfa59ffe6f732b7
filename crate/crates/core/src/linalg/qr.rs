use crate::error::{Error, Result};
use crate::linalg::matrix::{dot, norm2, Matrix};

/// Thin QR factors `A = Q R` with `Q` m×n orthonormal and `R` n×n upper
/// triangular with a nonnegative diagonal.
#[derive(Debug, Clone)]
pub struct ThinQr {
    pub q: Matrix,
    pub r: Matrix,
}

/// Householder QR of a tall matrix.
///
/// Reflectors are applied column by column; `Q` is accumulated by applying
/// them in reverse to the leading `n` columns of the identity. Afterwards
/// every row of `R` with a negative diagonal is negated together with the
/// matching column of `Q`, so the factorization is unique for full-rank `A`.
/// Rank deficiency is not an error here.
pub fn householder_qr(a: &Matrix) -> Result<ThinQr> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::Dimension(format!(
            "householder_qr needs m >= n, got {m}x{n}"
        )));
    }
    a.check_finite()?;

    let mut work = a.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);

    for k in 0..n {
        let x = &work.col(k)[k..];
        let alpha = norm2(x);
        let mut v = x.to_vec();
        if alpha == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        // v = x + sign(x0)‖x‖e1 avoids cancellation in the leading entry.
        let beta = if v[0] >= 0.0 { -alpha } else { alpha };
        v[0] -= beta;
        let vnorm = norm2(&v);
        if vnorm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        v.iter_mut().for_each(|e| *e /= vnorm);

        for j in k..n {
            let col = &mut work.col_mut(j)[k..];
            let s = 2.0 * dot(&v, col);
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
        // Column k below the diagonal is now zero up to rounding; make it exact.
        let col = work.col_mut(k);
        col[k] = beta;
        col[k + 1..].iter_mut().for_each(|e| *e = 0.0);
        reflectors.push(v);
    }

    let mut r = Matrix::from_fn(n, n, |i, j| if i <= j { work[(i, j)] } else { 0.0 });

    let mut q = Matrix::eye(m, n);
    for (k, v) in reflectors.iter().enumerate().rev() {
        if v.is_empty() {
            continue;
        }
        for j in 0..n {
            let col = &mut q.col_mut(j)[k..];
            let s = 2.0 * dot(v, col);
            if s == 0.0 {
                continue;
            }
            for (c, vi) in col.iter_mut().zip(v) {
                *c -= s * vi;
            }
        }
    }

    for i in 0..n {
        if r[(i, i)] < 0.0 {
            for j in i..n {
                r[(i, j)] = -r[(i, j)];
            }
            q.col_mut(i).iter_mut().for_each(|e| *e = -*e);
        }
    }

    Ok(ThinQr { q, r })
}

/// Inverse of a nonsingular upper triangular matrix by back substitution.
pub fn upper_triangular_inverse(r: &Matrix) -> Result<Matrix> {
    if !r.is_square() {
        return Err(Error::NotSquare {
            rows: r.rows(),
            cols: r.cols(),
        });
    }
    let n = r.rows();
    if let Some(i) = (0..n).find(|&i| r[(i, i)] == 0.0) {
        return Err(Error::InvalidArgument(format!(
            "upper triangular matrix has a zero pivot at {i}"
        )));
    }
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = 1.0 / r[(j, j)];
        for i in (0..j).rev() {
            let mut s = 0.0;
            for k in i + 1..=j {
                s += r[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -s / r[(i, i)];
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_matrix() -> Matrix {
        Matrix::from_rows(&[[0.5, 0.5], [0.5, -0.5], [0.5, 0.5], [0.5, -0.5]]).unwrap()
    }

    #[test]
    fn identity_factors_trivially() {
        let qr = householder_qr(&Matrix::identity(3)).unwrap();
        assert!((&qr.q - &Matrix::identity(3)).max_abs() < 1e-15);
        assert!((&qr.r - &Matrix::identity(3)).max_abs() < 1e-15);
    }

    #[test]
    fn orthonormal_input_is_reproduced() {
        let a = paper_matrix();
        // Columns are orthonormal: inner products 0, norms 1.
        assert!(dot(a.col(0), a.col(1)).abs() < 1e-16);
        assert!((norm2(a.col(0)) - 1.0).abs() < 1e-16);
        let qr = householder_qr(&a).unwrap();
        // Nonnegative diagonal makes both signs +1.
        assert!((&qr.q - &a).max_abs() < 1e-15);
        assert!((&qr.r - &Matrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn rejects_wide_matrix() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(householder_qr(&a), Err(Error::Dimension(_))));
    }

    #[test]
    fn rank_deficient_is_not_an_error() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        let qr = householder_qr(&a).unwrap();
        assert!(qr.r[(1, 1)].abs() < 1e-14);
        assert!((&(&qr.q * &qr.r) - &a).frobenius_norm() < 1e-14);
        let zero = householder_qr(&Matrix::zeros(3, 2)).unwrap();
        assert!(zero.r.is_zero());
    }

    #[test]
    fn triangular_inverse() {
        let r = Matrix::from_rows(&[[2.0, 1.0, -1.0], [0.0, 3.0, 0.5], [0.0, 0.0, 4.0]]).unwrap();
        let inv = upper_triangular_inverse(&r).unwrap();
        assert!((&(&r * &inv) - &Matrix::identity(3)).max_abs() < 1e-15);
        assert!(inv[(2, 0)] == 0.0);
    }
}
