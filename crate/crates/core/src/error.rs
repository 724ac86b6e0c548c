use thiserror::Error;

/// Errors produced by the numeric modules.
///
/// Parsing has its own diagnostic type (see [`crate::dsl::Diagnostic`]) because
/// it reports many located problems at once rather than failing fast.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("entries sum to {sum}, which is not within {tolerance:e} of 1")]
    NotNormalized { sum: f64, tolerance: f64 },

    #[error("negative or non-finite entry {value} at index {index}")]
    InvalidEntry { index: usize, value: f64 },

    #[error("empty distribution")]
    Empty,

    #[error("contract violation in {op}: expected {expected}, got {actual}")]
    Contract {
        op: &'static str,
        expected: String,
        actual: String,
    },

    #[error("no stationary distribution: {0}")]
    NoStationary(String),
}

pub type Result<T> = std::result::Result<T, Error>;
