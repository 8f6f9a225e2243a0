use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file did not follow its declared layout. `location` is a point index,
    /// line number or byte offset depending on the format.
    #[error("malformed file {path}: {reason}{}", location.map(|l| format!(" (at {l})")).unwrap_or_default())]
    MalformedFile {
        path: PathBuf,
        reason: String,
        location: Option<usize>,
    },

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty neighborhood")]
    EmptyNeighborhood,

    #[error("scene generation failed: {0}")]
    GenerationFailure(String),

    #[error("training failed: {0}")]
    TrainingFailure(String),

    #[error("invalid config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(
        path: impl Into<PathBuf>,
        reason: impl Into<String>,
        location: Option<usize>,
    ) -> Self {
        Error::MalformedFile {
            path: path.into(),
            reason: reason.into(),
            location,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Report an invalid argument found while reading a config as a config error.
    pub(crate) fn into_config(self) -> Self {
        match self {
            Error::InvalidArgument(m) => Error::Config(m),
            other => other,
        }
    }
}
