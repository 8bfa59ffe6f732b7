//! Leverage scores computed through QR decompositions, and the tools to
//! study how they move under perturbations of the matrix.
//!
//! - [`linalg`]: dense kernels (Householder QR, one-sided Jacobi SVD,
//!   projectors, `up(·)`).
//! - [`leverage`]: leverage scores from QR or SVD, κ₂ and stable rank.
//! - [`angles`]: principal angles between column spaces.
//! - [`gen`]: seeded test matrices.
//! - [`perturb`]: perturbation generators and perturbation magnitudes.
//! - [`bounds`]: per-row bound evaluators and the first-order `ΔQ` machinery.

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angles;
pub mod bounds;
pub mod error;
pub mod gen;
pub mod leverage;
pub mod linalg;
pub mod perturb;

pub use angles::{principal_angles, sin_theta_max_projector, PrincipalAngles};
pub use bounds::{BoundReport, Theorem, Verdict};
pub use error::{Error, Result};
pub use gen::{GenSpec, RngState, SvMode};
pub use leverage::{
    leverage_from_basis, leverage_qr, leverage_svd, matrix_stats, relative_diffs, LeverageScores,
    MatrixStats,
};
pub use linalg::Matrix;
pub use perturb::{measure, PerturbationKind, PerturbationMetrics, PerturbationSpec};
