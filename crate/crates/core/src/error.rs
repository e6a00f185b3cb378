//! Crate-wide error type.

/// Errors raised by toolkit operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two collections that must agree in shape do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An operation that needs data received none.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// A value lies outside its admissible range.
    #[error("out of bounds: {0}")]
    OutOfBounds(String),

    /// A linear system has no unique solution.
    #[error("singular system: {0}")]
    Singular(String),

    /// nRMSE reference value too close to zero to divide by.
    #[error("near-zero reference value {value:e} at index {index} (|y| < {eps:e}); relative error is undefined")]
    NearZeroReference { index: usize, value: f64, eps: f64 },

    /// A persisted document has an unsupported version tag.
    #[error("unsupported file version {found} (this build reads version {expected})")]
    UnsupportedVersion { found: u64, expected: u64 },

    /// A persisted document could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
