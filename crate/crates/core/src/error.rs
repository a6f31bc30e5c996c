use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument or configuration value.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Input data violates a requirement (empty class, too few samples, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A CSV cell could not be parsed.
    #[error("ingestion error at row {row}, column {column}: {message}")]
    Ingest {
        row: usize,
        column: String,
        message: String,
    },

    /// Linear algebra failure: singular or non positive definite matrix.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Two blobs cannot be separated (identical means and covariances).
    #[error("degenerate blob pair ({0}, {1})")]
    DegeneratePair(usize, usize),

    /// Assembled structures disagree with each other.
    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    /// Malformed model file.
    #[error("format error at {location}: {message}")]
    Format { location: String, message: String },

    #[error("unsupported model version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn format(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 2 parameter errors, 3 data errors, 4 numeric errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Unsupported(_) | Error::UnsupportedVersion { .. } => 2,
            Error::Data(_) | Error::Ingest { .. } | Error::Format { .. } | Error::Io { .. } => 3,
            Error::Numeric(_)
            | Error::DegeneratePair(..)
            | Error::Consistency(_)
            | Error::Training { .. } => 4,
        }
    }

    /// Module that raised the error, for user-facing reports.
    pub fn provenance(&self) -> &'static str {
        match self {
            Error::Ingest { .. } | Error::Data(_) => "datasets",
            Error::DegeneratePair(..) | Error::Numeric(_) => "lda",
            Error::Consistency(_) | Error::Format { .. } | Error::UnsupportedVersion { .. } => {
                "network"
            }
            Error::Training { .. } => "bp",
            Error::Parameter(_) | Error::Unsupported(_) | Error::Io { .. } => "cli",
        }
    }
}
