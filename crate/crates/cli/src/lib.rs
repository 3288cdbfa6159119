//! Command-line front end for the `liftdescent` solvers: runs benchmarks,
//! writes report/CSV artifacts and runs the verification suites.

pub mod config;
pub mod output;
pub mod run;
pub mod verify;

use liftdescent::Error;

/// Errors surfaced to the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver diverged: {0}")]
    Diverged(String),
    #[error("{0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Diverged(_) => 3,
            CliError::Solver(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(msg) => CliError::Config(msg),
            e @ Error::Diverged { .. } => CliError::Diverged(e.to_string()),
            e => CliError::Solver(e.to_string()),
        }
    }
}
