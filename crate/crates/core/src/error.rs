use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A function or tree file failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A constructed object violates one of its invariants.
    #[error("{0}")]
    Invalid(String),

    #[error("{what} out of range: {index}")]
    OutOfRange { what: &'static str, index: u64 },

    /// A computation would enumerate more points than the configured cap.
    #[error("enumeration cap exceeded: {points} points exceeds cap of {cap}")]
    CapExceeded { points: u128, cap: u64 },

    /// Two objects that must share a space or output space do not.
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A check was declined with a reason (e.g. a constant function where a
    /// ratio would divide by zero).
    #[error("skipped: {0}")]
    Skipped(String),
}

pub type Result<T> = std::result::Result<T, Error>;
