use thiserror::Error;

/// Errors raised by map construction, rate extraction and analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    /// A quantity that must be inverted (determinant, eigenvalue, denominator)
    /// fell at or below its threshold.
    #[error("singular {what}: value {value:e}")]
    Singular { what: &'static str, value: f64 },

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
