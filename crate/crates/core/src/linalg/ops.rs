use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matrix::Matrix;
use crate::linalg::svd::singular_values;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub two_norm: f64,
    pub frobenius_norm: f64,
    pub row_norms: Vec<f64>,
}

pub fn norms(a: &Matrix) -> Result<Norms> {
    Ok(Norms {
        two_norm: two_norm(a)?,
        frobenius_norm: a.frobenius_norm(),
        row_norms: a.row_norms(),
    })
}

/// Largest singular value.
pub fn two_norm(a: &Matrix) -> Result<f64> {
    if a.is_zero() {
        return Ok(0.0);
    }
    Ok(singular_values(a)?[0])
}

/// `(I − QQᵀ) X` for `Q` with orthonormal columns.
pub fn project_complement(q: &Matrix, x: &Matrix) -> Result<Matrix> {
    if q.rows() != x.rows() {
        return Err(Error::Dimension(format!(
            "project_complement: Q is {}x{} but X is {}x{}",
            q.rows(),
            q.cols(),
            x.rows(),
            x.cols()
        )));
    }
    let coeffs = q.tr_mul(x);
    Ok(x - &(q * &coeffs))
}

/// Upper-triangular extraction: half the diagonal plus the strictly upper
/// part, so that `up(Z) + up(Z)ᵀ = Z` for symmetric `Z`.
pub fn up(z: &Matrix) -> Result<Matrix> {
    if !z.is_square() {
        return Err(Error::NotSquare {
            rows: z.rows(),
            cols: z.cols(),
        });
    }
    let n = z.rows();
    Ok(Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Less => z[(i, j)],
        std::cmp::Ordering::Equal => 0.5 * z[(i, i)],
        std::cmp::Ordering::Greater => 0.0,
    }))
}
