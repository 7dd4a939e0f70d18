use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("partition failed: {0}")]
    Partition(String),

    #[error("vertices not covered by any submesh: {0:?}")]
    Uncovered(Vec<usize>),

    #[error("coincident connected vertices {0} and {1}")]
    CoincidentVertices(usize, usize),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("rank deficient block: column {column} has |r_kk| = {value:e}")]
    RankDeficient { column: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("bitstream error: {0}")]
    Format(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
