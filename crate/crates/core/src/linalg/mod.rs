//! Dense kernels: Householder QR, one-sided Jacobi SVD, norms, the
//! complement projector and the `up(·)` triangular extraction.

mod matrix;
mod ops;
mod qr;
mod svd;

pub use matrix::Matrix;
pub use ops::{norms, project_complement, two_norm, up, Norms};
pub use qr::{householder_qr, upper_triangular_inverse, ThinQr};
pub use svd::{jacobi_svd, singular_values, Svd, JACOBI_TOL, MAX_SWEEPS};
