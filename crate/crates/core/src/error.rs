use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input rejected before any computation took place.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Time integration stopped because the state became unusable.
    #[error("numerical abort at t = {time}: {reason}")]
    NumericalAbort { time: f64, reason: String },

    /// The data does not support a verdict (e.g. no clean power law).
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericalAbort { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
