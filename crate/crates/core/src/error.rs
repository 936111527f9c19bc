use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OverlapError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported weights: {0}")]
    UnsupportedWeights(String),
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
    #[error("degenerate covariance: {0}")]
    Degenerate(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl OverlapError {
    /// True for failures caused by the data or configuration rather than
    /// by numerical degeneracy or a bug.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            OverlapError::Domain(_)
                | OverlapError::InvalidInput(_)
                | OverlapError::DimensionMismatch { .. }
                | OverlapError::UnsupportedWeights(_)
        )
    }

    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            OverlapError::LinearAlgebra(_) | OverlapError::Degenerate(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, OverlapError>;
