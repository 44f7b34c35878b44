use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("graph is not connected")]
    Disconnected,

    #[error("no acceptable sample after {attempts} attempts ({reason})")]
    RetryCapExceeded { attempts: u32, reason: String },

    #[error("matrix is not symmetric (entry ({row}, {col}))")]
    NotSymmetric { row: usize, col: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("proximal solver hit the iteration cap ({iterations}) with residual {residual:e}")]
    ProxDidNotConverge { iterations: usize, residual: f64 },

    #[error("aggregate Hessian is singular (alpha = {alpha:e})")]
    SingularHessian { alpha: f64 },

    #[error(
        "radius denominator is not positive ({value:e}); stepsize violates the stability condition"
    )]
    NonPositiveDenominator { value: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn dims(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            expected: expected.into(),
            actual: actual.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
