use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by grid construction, projection and experiment I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("block {0} has zero mass")]
    ZeroMassBlock(usize),

    #[error("infeasible tolerance band: {0}")]
    InfeasibleBand(String),

    #[error("scaling root solver failed: {0}")]
    SolverFailure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed grid file {path}: {reason}")]
    MalformedInput { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
