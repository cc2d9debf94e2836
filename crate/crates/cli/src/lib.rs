//! Batch front end for the gibbs-scan experiments. The binary is a thin
//! wrapper over [`commands`].

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Core(#[from] gibbs_scan::Error),
}

impl CliError {
    /// 2 for bad arguments or a missing certificate, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_argument_error() => 2,
            _ => 1,
        }
    }
}
