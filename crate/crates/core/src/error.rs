use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("flow is not feasible: {0}")]
    Infeasible(String),

    #[error("no convergence after {iterations} iterations (gap {gap:.3e})")]
    NoConvergence { iterations: usize, gap: f64 },

    #[error("sink {sink} unreachable from {origin}")]
    Unreachable { origin: String, sink: String },

    #[error("toll {value} on edge {edge} outside [0, {cap}]")]
    TollOutOfRange { edge: usize, value: f64, cap: f64 },

    #[error("oracle query budget of {0} exhausted")]
    OracleBudgetExceeded(usize),

    #[error("target flow is not feasible: {0}")]
    TargetInfeasible(String),

    #[error("target flow has a directed cycle in commodity {0}")]
    TargetCyclic(usize),

    #[error("separation cut is degenerate (norm {0:.3e})")]
    DegenerateCut(f64),

    #[error("ellipsoid update broke down: {0}")]
    NumericBreakdown(String),

    #[error("zero-order cost sample failed: {0}")]
    OracleSampleFailed(String),

    #[error("commodity {0} has a directed cycle among its usable edges")]
    CyclicNetwork(usize),

    #[error("bad instance spec: {0}")]
    BadSpec(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
