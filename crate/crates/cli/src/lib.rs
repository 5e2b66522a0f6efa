//! Batch front end: file formats, run manifests and the commands behind the
//! `metaflex` binary.

pub mod cli;
pub mod commands;
pub mod error;
pub mod formats;
pub mod manifest;

pub use error::{CliError, CliResult};
