use thiserror::Error;

/// Errors produced by the centrality pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("edge ({u}, {v}) has nonpositive or non-finite weight {w}")]
    NonPositiveWeight { u: usize, v: usize, w: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid kernel row {row}: {reason}")]
    InvalidKernel { row: usize, reason: String },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("I - Q is singular: no absorption reachable from rows {zero_leak_rows:?}")]
    Singular { zero_leak_rows: Vec<usize> },

    #[error("linear solve residual {residual:e} exceeds tolerance")]
    Residual { residual: f64 },

    #[error("exact enumeration needs 2^{edges} subsets, above the cap of 2^{cap}")]
    EnumerationCap { edges: usize, cap: usize },

    #[error("trajectory exceeded {cap} steps without absorption")]
    TrajectoryCap { cap: usize },

    #[error("expected absorption time {expected_t} leaves no post-initial steps")]
    NoPostInitialSteps { expected_t: f64 },

    #[error("every row is absorbed with probability one; no continuation law exists")]
    NoContinuation,

    #[error("uncertainty set row {row} is empty")]
    InfeasibleRow { row: usize },

    #[error("perturbation leaves the admissible region at row {row}")]
    Inadmissible { row: usize },

    #[error("base topology has no triangles")]
    NoTriangles,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
