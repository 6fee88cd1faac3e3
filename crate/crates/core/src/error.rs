use crate::fpformat::Format;

/// Errors raised by the normalization pipeline and its building blocks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An operand outside the domain of the operation (NaN, Inf, non-positive).
    #[error("domain error: {0}")]
    Domain(String),

    /// Two operands or vectors carry different formats.
    #[error("format mismatch: expected {expected}, found {found}")]
    FormatMismatch { expected: Format, found: Format },

    /// Vectors that must share a length do not.
    #[error("shape error: {0}")]
    Shape(String),

    /// Invalid parameters supplied by the caller.
    #[error("usage error: {0}")]
    Usage(String),

    /// A value overflowed the target format and the computation cannot proceed.
    #[error("range error: {0}")]
    Range(String),

    /// The squared norm is zero, so the inverse norm is undefined.
    #[error("degenerate input: squared norm is zero")]
    ZeroNorm,

    /// The continuous solution left the positive basin.
    #[error("out of basin: {0}")]
    OutOfBasin(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
