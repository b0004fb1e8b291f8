//! Error type shared across the engine.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("zero-norm embedding")]
    ZeroNorm,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid bounding box ({x_min}, {y_min}, {x_max}, {y_max})")]
    InvalidBox {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },

    #[error("reference store is empty")]
    EmptyStore,

    #[error("duplicate record index {0}")]
    DuplicateIndex(u64),

    #[error("label {0:?} is not mapped by the taxonomy")]
    UnmappedLabel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("frame index {current} is not after {previous}")]
    OutOfOrderFrame { previous: u64, current: u64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Malformed input data (files, CLI payloads) as opposed to a violated
    /// call contract. The CLI maps input errors to exit code 1 and contract
    /// violations to exit code 2.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Io(_))
    }

    /// Convenience constructor for line-addressed parse failures.
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
