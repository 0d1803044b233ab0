use std::path::PathBuf;

use thiserror::Error;

/// Problems with the run configuration; exit code 2.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },

    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),

    #[error("{experiment} failed while {context}: {source}")]
    Experiment {
        experiment: &'static str,
        context: String,
        source: ergoprop::Error,
    },

    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}
