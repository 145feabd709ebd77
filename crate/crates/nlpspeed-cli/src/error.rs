//! Errors of the command-line pipeline and their process exit codes.

use std::path::PathBuf;

use thiserror::Error;

/// Failures of a command.
#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration or the command line is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    /// Reading or writing a file failed.
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A formula, solver or simulation failed.
    #[error(transparent)]
    Model(#[from] nlpspeed::Error),

    /// One or more comparison checks failed.
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

impl CliError {
    /// Exit code: 1 for failed checks, 2 for usage, configuration and
    /// input errors, 1 for run-time failures of a valid configuration.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::ChecksFailed { .. } => 1,
            Self::Config(_) | Self::Io { .. } => 2,
            Self::Model(nlpspeed::Error::InvalidParameter { .. }) => 2,
            Self::Model(_) => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CliError>;
