use thiserror::Error;

/// Errors raised by the solvers and their inputs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GmlError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("truncation specs differ: {0:?} vs {1:?}")]
    TruncationMismatch([u8; 5], [u8; 5]),

    #[error("non-positive pivot {pivot:e} at row {row}")]
    ZeroPivot { row: usize, pivot: f64 },

    #[error("newton iteration failed after {iterations} steps (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("field csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, GmlError>;
