use thiserror::Error;

/// Errors raised by grid construction, profile algebra and configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("profile lives on a different grid (n={found_n}, N={found_points}) than expected (n={expected_n}, N={expected_points})")]
    GridMismatch {
        expected_n: usize,
        expected_points: usize,
        found_n: usize,
        found_points: usize,
    },

    #[error("profile has no pole parity; values cannot be reflected through the poles")]
    UndefinedParity,

    #[error("length mismatch: expected {expected} values, found {found}")]
    Length { expected: usize, found: usize },

    #[error("{0}")]
    Domain(String),

    #[error("config syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("config error: {0}")]
    Semantic(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
