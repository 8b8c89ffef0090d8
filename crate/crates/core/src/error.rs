use std::path::PathBuf;

use thiserror::Error;

use crate::classify::ClassifyError;
use crate::cmos::CmosError;
use crate::features::FeatureError;
use crate::freqselect::SelectError;
use crate::metrics::MetricsError;
use crate::rf::RfError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Rf(#[from] RfError),
    #[error(transparent)]
    Cmos(#[from] CmosError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NON_CONVERGENCE: i32 = 4;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Json { .. } => EXIT_IO,
            Error::Classify(ClassifyError::NonConvergence { .. }) => EXIT_NON_CONVERGENCE,
            _ => EXIT_CONFIG,
        }
    }
}
