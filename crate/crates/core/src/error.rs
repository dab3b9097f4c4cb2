use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the thresholding operators, solvers and problem generators.
#[derive(Debug, Error)]
pub enum Ts1Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range (valid range {lo}..={hi})")]
    Index { index: usize, lo: usize, hi: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Ts1Error> = std::result::Result<T, E>;

impl Ts1Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Ts1Error::Domain(msg.into())
    }

    pub(crate) fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Ts1Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
