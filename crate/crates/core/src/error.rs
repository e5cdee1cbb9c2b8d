use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("no rows")]
    Empty,

    #[error("gap at {0}")]
    Gap(i64),

    #[error("non-positive factor {value} in column {column} for year {year}")]
    NonPositiveFactor {
        year: i32,
        column: &'static str,
        value: f64,
    },

    #[error("{0} is out of range")]
    OutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid bins: {0}")]
    InvalidBins(String),

    #[error("units mismatch: {0}")]
    Units(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::OutOfRange(msg.into())
    }

    pub(crate) fn bins(msg: impl Into<String>) -> Self {
        Error::InvalidBins(msg.into())
    }

    /// Process exit status used by the command-line front end for data errors.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
