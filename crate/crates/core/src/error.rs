//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("solver did not converge after {iterations} iterations (force norm {force_norm:.3e})")]
    NotConverged { iterations: usize, force_norm: f64 },
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("stage {stage} failed: {source}")]
    Stage { stage: usize, source: Box<Error> },
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("optimizer failed: {0}")]
    Optimizer(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
