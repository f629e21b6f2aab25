use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown potential `{0}`")]
    UnknownPotential(String),

    #[error("invalid parameter `{name}` for potential `{potential}`: {reason}")]
    InvalidParameter {
        potential: String,
        name: String,
        reason: String,
    },

    /// A structural hypothesis on the potential does not hold.
    #[error("hypothesis `{hypothesis}` violated: {detail}")]
    Hypothesis { hypothesis: String, detail: String },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("weight overflow guard: c*(M - x_ref) = {0} exceeds 500")]
    WeightOverflow(f64),

    #[error("non-finite potential value at node {node}")]
    NonFinite { node: usize },

    #[error("invalid breakpoints: {0}")]
    Breakpoints(String),

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("speed bisection failed: {0}")]
    Bisection(String),

    #[error("semiflow blow-up at t = {time}: |u| = {norm}")]
    BlowUp { time: f64, norm: f64 },

    #[error("front tracking failed: {0}")]
    Front(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("nothing to plot: report carries no wave")]
    NothingToPlot,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(potential: &str, name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            potential: potential.to_string(),
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
