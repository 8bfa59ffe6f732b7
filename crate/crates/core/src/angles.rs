//! Principal angles between two n-dimensional column spaces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leverage::ORTHONORMAL_TOL;
use crate::linalg::{jacobi_svd, project_complement, two_norm, Matrix};

/// Cosines above this threshold get their sines from a difference formula
/// instead of `√(1 − c²)`.
pub const SMALL_ANGLE_COS: f64 = 0.999;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalAngles {
    /// `cos θ₁ ≥ … ≥ cos θₙ`.
    pub cosines: Vec<f64>,
    /// `sin θ₁ ≤ … ≤ sin θₙ`.
    pub sines: Vec<f64>,
}

impl PrincipalAngles {
    pub fn cos_theta_min_angle(&self) -> f64 {
        self.cosines[0]
    }

    pub fn sin_theta_max_angle(&self) -> f64 {
        *self.sines.last().expect("nonempty angle set")
    }

    pub fn angles(&self) -> Vec<f64> {
        self.cosines
            .iter()
            .zip(&self.sines)
            .map(|(c, s)| s.atan2(*c))
            .collect()
    }
}

fn check_pair(q: &Matrix, q_tilde: &Matrix) -> Result<()> {
    if q.shape() != q_tilde.shape() {
        return Err(Error::Dimension(format!(
            "subspace bases must have equal shapes, got {:?} and {:?}",
            q.shape(),
            q_tilde.shape()
        )));
    }
    if q.rows() < q.cols() {
        return Err(Error::Dimension(format!(
            "basis must be tall, got {}x{}",
            q.rows(),
            q.cols()
        )));
    }
    for m in [q, q_tilde] {
        let residual = m.gram_residual();
        if !(residual <= ORTHONORMAL_TOL) {
            return Err(Error::NotOrthonormal {
                residual,
                tolerance: ORTHONORMAL_TOL,
            });
        }
    }
    Ok(())
}

/// Principal angles from the SVD `QᵀQ̃ = U Σ Vᵀ`.
///
/// Cosines are clamped to `[0, 1]`. For cosines above [`SMALL_ANGLE_COS`]
/// the sine is recovered from the singular values `2 sin(θᵢ/2)` of
/// `Q − Q̃ V Uᵀ`, the distance between the aligned bases, which keeps full
/// absolute accuracy for tiny angles.
pub fn principal_angles(q: &Matrix, q_tilde: &Matrix) -> Result<PrincipalAngles> {
    check_pair(q, q_tilde)?;
    let svd = jacobi_svd(&q.tr_mul(q_tilde))?;
    let cosines: Vec<f64> = svd.sigma.iter().map(|c| c.clamp(0.0, 1.0)).collect();

    let mut sines: Vec<f64> = cosines.iter().map(|c| (1.0 - c * c).sqrt()).collect();
    if cosines.iter().any(|&c| c > SMALL_ANGLE_COS) {
        let rotation = &svd.v * &svd.u.transpose();
        let gap = q - &(q_tilde * &rotation);
        let mut half_chords = jacobi_svd(&gap)?.sigma;
        half_chords.reverse();
        for (i, &c) in cosines.iter().enumerate() {
            if c > SMALL_ANGLE_COS {
                let h = half_chords[i];
                sines[i] = (h * (1.0 - 0.25 * h * h).sqrt()).clamp(0.0, 1.0);
            }
        }
    }
    // Enforce the ordering the two formulas agree on up to rounding.
    for i in 1..sines.len() {
        if sines[i] < sines[i - 1] {
            sines[i] = sines[i - 1];
        }
    }

    Ok(PrincipalAngles { cosines, sines })
}

/// `sin θₙ = ‖(I − QQᵀ) Q̃‖₂`.
pub fn sin_theta_max_projector(q: &Matrix, q_tilde: &Matrix) -> Result<f64> {
    check_pair(q, q_tilde)?;
    two_norm(&project_complement(q, q_tilde)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_col_major(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn identical_subspaces() {
        let q = Matrix::eye(5, 2);
        let pa = principal_angles(&q, &q).unwrap();
        assert_eq!(pa.cosines, vec![1.0, 1.0]);
        assert_eq!(pa.sines, vec![0.0, 0.0]);
        assert_eq!(sin_theta_max_projector(&q, &q).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_lines() {
        let pa = principal_angles(&col(&[1.0, 0.0]), &col(&[0.0, 1.0])).unwrap();
        assert_eq!(pa.cosines, vec![0.0]);
        assert_eq!(pa.sines, vec![1.0]);
        assert!((pa.angles()[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let s = sin_theta_max_projector(&col(&[1.0, 0.0]), &col(&[0.0, 1.0])).unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn diagonal_line() {
        let h = 0.5_f64.sqrt();
        let pa = principal_angles(&col(&[1.0, 0.0]), &col(&[h, h])).unwrap();
        assert!((pa.cosines[0] - h).abs() < 1e-15);
        assert!((pa.sines[0] - h).abs() < 1e-15);
    }

    #[test]
    fn tiny_angle_is_resolved() {
        let t: f64 = 1e-9;
        let pa = principal_angles(&col(&[1.0, 0.0, 0.0]), &col(&[t.cos(), t.sin(), 0.0])).unwrap();
        assert!((pa.sines[0] - t.sin()).abs() < 1e-20);
    }

    #[test]
    fn rejects_bad_inputs() {
        let q = Matrix::eye(4, 2);
        assert!(principal_angles(&q, &Matrix::eye(4, 1)).is_err());
        let bad = Matrix::from_rows(&[[2.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(
            principal_angles(&q, &bad),
            Err(Error::NotOrthonormal { .. })
        ));
        assert!(sin_theta_max_projector(&bad, &q).is_err());
    }
}
