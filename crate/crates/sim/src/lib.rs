//! Monte-Carlo sweeps, figure presets, configuration files and output
//! formats on top of `cellfree-core`.

pub mod config;
pub mod output;
pub mod runner;

use cellfree_core::Error;

/// Failures surfaced by the command-line tool.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid value for `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("I/O error: {0}")]
    Io(String),

    #[error(transparent)]
    Sim(Error),
}

impl SimError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code: 2 for configuration errors, 3 for I/O errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config { .. } => 2,
            SimError::Io(_) => 3,
            SimError::Sim(_) => 1,
        }
    }
}

impl From<Error> for SimError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { key, reason } => SimError::Config { key, reason },
            other => SimError::Sim(other),
        }
    }
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}

impl From<csv::Error> for SimError {
    fn from(e: csv::Error) -> Self {
        SimError::Io(e.to_string())
    }
}
