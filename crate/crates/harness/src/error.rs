use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("invalid experiment: {0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] airoas_core::Error),

    #[error("episode {index}: {source}")]
    Episode {
        index: usize,
        #[source]
        source: airoas_core::Error,
    },

    #[error("{path}:{line}: {message}")]
    Record { path: PathBuf, line: usize, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Short machine-readable category for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Io { .. } => "io",
            HarnessError::Config { .. } => "config",
            HarnessError::Invalid(_) => "invalid",
            HarnessError::Core(_) => "solver",
            HarnessError::Episode { .. } => "episode",
            HarnessError::Record { .. } => "record",
            HarnessError::Csv(_) => "csv",
            HarnessError::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
