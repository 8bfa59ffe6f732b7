//! Leverage scores and the matrix statistics that parameterize the bounds.
//!
//! The leverage score of row `j` is the squared norm of row `j` of any
//! orthonormal basis for the column space. [`leverage_qr`] takes the basis
//! from a Householder QR; [`leverage_svd`] takes it from the left singular
//! vectors and serves as an independent cross-check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{householder_qr, jacobi_svd, singular_values, Matrix};

/// Gram residual `‖QᵀQ − I‖_F` above which a basis is rejected.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Relative rank tolerance per row: `A` is numerically full rank when
/// `σ_min > m · RANK_EPS · σ_max`.
pub const RANK_EPS: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeverageScores {
    pub values: Vec<f64>,
    /// Column count of the source matrix; the scores sum to it.
    pub n: usize,
}

impl LeverageScores {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }
}

impl std::ops::Index<usize> for LeverageScores {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.values[j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixStats {
    pub kappa2: f64,
    pub stable_rank: f64,
    pub two_norm: f64,
    pub frobenius_norm: f64,
    pub sigma_min: f64,
}

/// Squared row norms of an orthonormal basis.
pub fn leverage_from_basis(q: &Matrix) -> Result<LeverageScores> {
    let residual = q.gram_residual();
    if residual.is_nan() || residual > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal {
            residual,
            tolerance: ORTHONORMAL_TOL,
        });
    }
    let values = q.row_norms().into_iter().map(|r| r * r).collect();
    Ok(LeverageScores {
        values,
        n: q.cols(),
    })
}

pub(crate) fn check_full_rank(m: usize, sigma: &[f64]) -> Result<()> {
    let smax = sigma[0];
    let smin = *sigma.last().unwrap();
    let tolerance = m as f64 * RANK_EPS;
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if !(ratio > tolerance) {
        return Err(Error::RankDeficient { ratio, tolerance });
    }
    Ok(())
}

/// Leverage scores from the `Q` factor of a Householder QR.
pub fn leverage_qr(a: &Matrix) -> Result<LeverageScores> {
    let qr = householder_qr(a)?;
    // R has the singular values of A.
    check_full_rank(a.rows(), &singular_values(&qr.r)?)?;
    leverage_from_basis(&qr.q)
}

/// Leverage scores from the left singular vectors.
pub fn leverage_svd(a: &Matrix) -> Result<LeverageScores> {
    if a.rows() < a.cols() {
        return Err(Error::Dimension(format!(
            "leverage scores need m >= n, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let svd = jacobi_svd(a)?;
    check_full_rank(a.rows(), &svd.sigma)?;
    leverage_from_basis(&svd.u)
}

/// κ₂, stable rank and norms from the singular values.
pub fn matrix_stats(a: &Matrix) -> Result<MatrixStats> {
    if a.rows() < a.cols() {
        return Err(Error::Dimension(format!(
            "matrix statistics need m >= n, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let sigma = singular_values(a)?;
    check_full_rank(a.rows(), &sigma)?;
    let two_norm = sigma[0];
    let sigma_min = *sigma.last().unwrap();
    let frobenius_norm = a.frobenius_norm();
    Ok(MatrixStats {
        kappa2: two_norm / sigma_min,
        stable_rank: (frobenius_norm / two_norm).powi(2),
        two_norm,
        frobenius_norm,
        sigma_min,
    })
}

/// `|ℓ̃_j − ℓ_j| / ℓ_j` where `ℓ_j > floor`; `None` elsewhere.
pub fn relative_diffs(
    base: &LeverageScores,
    pert: &LeverageScores,
    floor: f64,
) -> Result<Vec<Option<f64>>> {
    if base.len() != pert.len() {
        return Err(Error::Dimension(format!(
            "leverage vectors have lengths {} and {}",
            base.len(),
            pert.len()
        )));
    }
    if !(floor >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "relative difference floor must be >= 0, got {floor}"
        )));
    }
    Ok(base
        .iter()
        .zip(pert.iter())
        .map(|(l, lt)| (l > floor).then(|| (lt - l).abs() / l))
        .collect())
}

/// `|ℓ̃_j − ℓ_j|`.
pub fn absolute_diffs(base: &LeverageScores, pert: &LeverageScores) -> Result<Vec<f64>> {
    if base.len() != pert.len() {
        return Err(Error::Dimension(format!(
            "leverage vectors have lengths {} and {}",
            base.len(),
            pert.len()
        )));
    }
    Ok(base
        .iter()
        .zip(pert.iter())
        .map(|(l, lt)| (lt - l).abs())
        .collect())
}
