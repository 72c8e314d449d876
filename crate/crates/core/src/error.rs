use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed file: {0}")]
    MalformedFile(String),

    #[error("length mismatch: expected {expected}, found {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("classes missing from profiling set: {0:?}")]
    MissingClass(Vec<u16>),

    #[error("numerical error: {0}")]
    NumericalError(String),

    #[error("all coefficients are zero, nothing to rank")]
    EmptyPareto,

    #[error("result carries no per-sample curve")]
    CurveAbsent,

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// A plan document is well-formed JSON but violates the plan schema.
    #[error("{pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error("executor failed: {0}")]
    Executor(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}
