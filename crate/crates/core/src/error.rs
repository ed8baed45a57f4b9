use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("unknown target {name:?}; available: {available}")]
    UnknownTarget { name: String, available: String },

    #[error("unknown category {0:?}")]
    UnknownCategory(String),

    #[error("record {index}: {message}")]
    Record { index: usize, message: String },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            what,
            message: message.into(),
        }
    }

    /// Process exit code for the command-line tool: 3 for bad input data,
    /// 4 for failures inside the numerical pipeline.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Record { .. }
            | Error::Format { .. }
            | Error::Io { .. }
            | Error::Json(_)
            | Error::Csv(_)
            | Error::UnknownTarget { .. }
            | Error::UnknownCategory(_) => 3,
            Error::Config(_) => 2,
            _ => 4,
        }
    }
}
