use std::path::PathBuf;

use thiserror::Error;

use crate::integrator::EventKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("shot from x0 = {x0} (offset {epsilon:e}) ended with {terminal:?} before reaching the turning point")]
    NonTerminatingShot {
        x0: f64,
        epsilon: f64,
        terminal: EventKind,
    },

    #[error("invalid bracket [{lo}, {hi}]: F(lo) = {f_lo}, F(hi) = {f_hi} do not change sign")]
    InvalidBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("bracket lost at offset {at:e} after {iterations} iterations: {reason}")]
    BracketLost {
        at: f64,
        iterations: usize,
        reason: String,
    },

    #[error("bisection stalled with |F| = {residual:e} > {tol:e} (bracket width {width:e})")]
    RootNotConverged { residual: f64, tol: f64, width: f64 },

    #[error("closed profile assembly failed: {0}")]
    Assembly(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
