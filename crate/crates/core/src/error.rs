use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the simulator, the experiment runner and the analysis
/// toolkit. Each variant belongs to one of the categories the CLI maps onto an
/// exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration for `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error in {path}: {reason}")]
    Schema { path: PathBuf, reason: String },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
}

/// Coarse error category, used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Io,
    Metric,
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config { .. } | Error::Usage(_) => ErrorKind::Config,
            Error::Io { .. } | Error::Schema { .. } => ErrorKind::Io,
            Error::UndefinedMetric(_) => ErrorKind::Metric,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
