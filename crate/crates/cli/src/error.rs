use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("`{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("{context}: {source}")]
    Compute {
        context: String,
        #[source]
        source: sensit_core::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed table: {0}")]
    Table(String),

    #[error("cannot plot: {0}")]
    Plot(String),
}

impl CliError {
    /// Stable tag printed on failure, one per variant.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::Validation { .. } => "validation",
            CliError::Compute { .. } => "compute",
            CliError::Io { .. } => "io",
            CliError::Table(_) => "table",
            CliError::Plot(_) => "plot",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::Validation { .. } => 3,
            CliError::Compute { .. } => 4,
            CliError::Io { .. } => 5,
            CliError::Table(_) => 6,
            CliError::Plot(_) => 7,
        }
    }

    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Validation { field: field.into(), reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
