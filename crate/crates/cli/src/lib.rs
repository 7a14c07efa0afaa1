//! Library side of the `ssrna` command-line tool: configuration parsing,
//! report types and the command runners. `main.rs` only handles arguments
//! and exit codes.

pub mod commands;
pub mod config;
pub mod report;

use thiserror::Error;

/// Process exit status for invalid input (config, flags, output directory).
pub const EXIT_INVALID: i32 = 2;
/// Process exit status for numerical failures during a run.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}
