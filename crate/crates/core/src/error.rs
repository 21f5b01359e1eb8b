use std::path::PathBuf;

/// Errors produced by network construction, rate evaluation and the sweep harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid chain topology: N = {n_relays}, k = {reach} (need N >= 1 and 1 <= k <= N + 1)")]
    InvalidTopology { n_relays: usize, reach: usize },

    #[error("{what} must be strictly positive and finite, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("channel gain on edge {from} -> {to} must be finite, got {value}")]
    NonFiniteGain { from: usize, to: usize, value: f64 },

    #[error("no edge {from} -> {to} in the chain")]
    NoSuchEdge { from: usize, to: usize },

    #[error("node {node} out of range (valid: {lo}..={hi})")]
    NodeOutOfRange { node: usize, lo: usize, hi: usize },

    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("scaling factor for relay {relay} is {value}, outside [0, {max}]")]
    Infeasible { relay: usize, value: f64, max: f64 },

    #[error("quadrature did not converge within {nodes} nodes (last change {delta:e})")]
    QuadratureNotConverged { nodes: usize, delta: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
