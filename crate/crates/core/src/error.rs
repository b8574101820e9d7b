use thiserror::Error;

use crate::solver::SolveReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point outside the kernel domain: {0:?}")]
    OutsideDomain(Vec<f64>),

    #[error("node sets do not match: {0}")]
    MismatchedNodes(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("seed potential is infinite at sigma-node {node}")]
    InfiniteSeed { node: usize },

    #[error("iteration did not converge within {} iterations", .0.iterations)]
    NotConverged(Box<SolveReport>),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
