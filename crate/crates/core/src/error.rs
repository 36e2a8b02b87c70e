use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range for graph with {node_count} nodes")]
    NodeOutOfRange { index: usize, node_count: usize },

    #[error("invalid edge weight {weight} on edge {source_node} -> {target}")]
    InvalidWeight {
        source_node: usize,
        target: usize,
        weight: f64,
    },

    #[error("node {node} has no outgoing edges")]
    DanglingNode { node: usize },

    #[error("matrix is not row-stochastic at row {row}: {reason}")]
    NotStochastic { row: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("chain is not ergodic: {0}")]
    NotErgodic(String),

    #[error("iteration failed to converge: {0}")]
    FailedToConverge(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("product too large: {nonzeros} nonzeros exceeds cap {cap}")]
    TooLarge { nonzeros: usize, cap: usize },

    #[error("invalid topology spec: {0}")]
    Spec(String),

    #[error("invalid belief system: {0}")]
    InvalidSystem(String),

    #[error("belief system does not converge: {0}")]
    NonConvergent(String),

    #[error("no coupling trial met within {step_cap} steps ({trials} trials)")]
    AllTrialsCapped { trials: usize, step_cap: u64 },

    #[error("fixed point is not unique: {0}")]
    NoUniqueFixedPoint(String),

    #[error("component limits out of order: {0}")]
    Ordering(String),

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("edge list {0} contains no edges")]
    EmptyGraph(PathBuf),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Spec(_) | Error::Config(_) => 2,
            Error::Parse { .. } | Error::EmptyGraph(_) | Error::Io(_) | Error::Csv(_) => 3,
            _ => 4,
        }
    }
}
