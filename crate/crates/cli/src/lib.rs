//! Command-line front end: config parsing, presets, run output and the
//! `run`, `riemann` and `verify` subcommands.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Solver(#[from] gasdecay::Error),
}

impl CliError {
    /// 2 for usage errors, 1 for failures at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}
