//! Command errors and their process exit codes.

use std::path::PathBuf;

use thiserror::Error;

/// Exit code for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code for malformed input, usage or I/O errors.
pub const EXIT_INVALID: i32 = 2;
/// Exit code for an equilibrium solve that did not converge.
pub const EXIT_NOT_CONVERGED: i32 = 3;
/// Exit code for an optimizer failure.
pub const EXIT_OPTIMIZER: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] metaflex::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Usage(_) => EXIT_INVALID,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

fn core_exit_code(e: &metaflex::Error) -> i32 {
    use metaflex::Error as E;
    match e {
        E::Invalid(_) | E::Degenerate(_) | E::Format(_) | E::Io(_) => EXIT_INVALID,
        E::NotConverged { .. } | E::NonFinite(_) | E::LinearSolve(_) => EXIT_NOT_CONVERGED,
        E::Optimizer(_) => EXIT_OPTIMIZER,
        E::Stage { source, .. } => core_exit_code(source),
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
