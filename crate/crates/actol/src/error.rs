use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("invalid config: {0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("clip file {path}: {message}")]
    Clip { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] actol_core::Error),

    #[error("thread pool: {0}")]
    Threads(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// Process exit code: 3 for a loss that left the finite range, 2 for
    /// everything else that stops a command before it can report.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(actol_core::Error::NonFiniteLoss { .. }) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
