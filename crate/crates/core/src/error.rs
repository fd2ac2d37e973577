use thiserror::Error;

use crate::budget::BudgetError;
use crate::detection::DetectionError;
use crate::device::ConfigError;
use crate::dynamics::DynamicsError;

/// Top-level error used by the orchestration layer and the binary.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error("invalid request: {0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 2 usage, 3 config, 4 numeric, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Config(_) => 3,
            Error::Dynamics(e) if e.is_usage() => 2,
            Error::Dynamics(_) => 4,
            Error::Detection(e) if e.is_usage() => 2,
            Error::Detection(_) => 4,
            Error::Budget(BudgetError::Calibration(_)) => 3,
            Error::Budget(_) => 2,
            Error::Io { .. } => 5,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
