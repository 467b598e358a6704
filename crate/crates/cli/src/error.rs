use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] sdde_core::Error),

    #[error("{failed} of {total} paths blew up")]
    PartialEnsemble { failed: usize, total: usize },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
}

/// Body of `error.json`.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_fraction: Option<f64>,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Core(e) => e.code(),
            CliError::PartialEnsemble { .. } => "PartialEnsemble",
            CliError::Io { .. } => "IoError",
            CliError::UnknownExperiment(_) => "UnknownExperiment",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::UnknownExperiment(_) => 2,
            CliError::PartialEnsemble { .. } => 3,
            CliError::Io { .. } => 4,
            CliError::Core(_) => 1,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            kind: self.kind(),
            message: self.to_string(),
            failed_fraction: match self {
                CliError::PartialEnsemble { failed, total } => Some(*failed as f64 / *total as f64),
                _ => None,
            },
        }
    }
}
