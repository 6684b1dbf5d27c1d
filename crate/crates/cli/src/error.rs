use std::path::PathBuf;

use fireline_core::network::NetworkError;
use fireline_core::optimize::OptimizeError;
use fireline_core::raster::RasterError;
use fireline_core::risk::RiskError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("{0}")]
    Infeasible(String),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error("segment ids of {path} do not match the segments file: {detail}")]
    Mismatch { path: PathBuf, detail: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn parse(path: impl Into<PathBuf>, e: impl ToString) -> Self {
        CliError::Parse {
            path: path.into(),
            message: e.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn network(path: impl Into<PathBuf>, e: NetworkError) -> Self {
        Self::parse(path, e)
    }

    pub fn risk(path: impl Into<PathBuf>, e: RiskError) -> Self {
        match e {
            RiskError::Io(source) => Self::io(path, source),
            other => Self::parse(path, other),
        }
    }

    /// 2 unparsable input, 3 misaligned rasters, 4 infeasible
    /// configuration, 5 segment universe mismatch, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::Raster(e) => match e.root() {
                RasterError::GridMisalignment { .. } => 3,
                RasterError::Io { .. } => 1,
                RasterError::DuplicateScenario(_)
                | RasterError::LabelCountMismatch { .. }
                | RasterError::EmptyScenarioSet => 4,
                _ => 2,
            },
            CliError::Infeasible(_) => 4,
            CliError::Optimize(e) => match e {
                OptimizeError::SegmentUniverseMismatch(_) | OptimizeError::LengthMismatch { .. } => 5,
                OptimizeError::InvalidBudget(_)
                | OptimizeError::NonMonotoneBudgets { .. }
                | OptimizeError::CapacityOverflow { .. }
                | OptimizeError::TooLarge { .. }
                | OptimizeError::InvalidInput(_) => 4,
                OptimizeError::NodeLimitExceeded { .. } => 1,
            },
            CliError::Mismatch { .. } => 5,
            CliError::Io { .. } | CliError::Other(_) => 1,
        }
    }
}
