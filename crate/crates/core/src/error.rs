use thiserror::Error;

/// Errors raised by the numerical kernels, generators and bound evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is numerically rank deficient: sigma_min/sigma_max = {ratio:e} (tolerance {tolerance:e})")]
    RankDeficient { ratio: f64, tolerance: f64 },

    #[error("columns are not orthonormal: ||Q^T Q - I||_F = {residual:e} exceeds {tolerance:e}")]
    NotOrthonormal { residual: f64, tolerance: f64 },

    #[error("Jacobi SVD did not converge within {sweeps} sweeps (off-diagonal {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("hypothesis of {theorem} violated: {quantity} = {value:e}, required {requirement}")]
    Hypothesis {
        theorem: &'static str,
        quantity: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
