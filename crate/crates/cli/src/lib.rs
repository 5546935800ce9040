//! Batch experiments for the `ddps` library: run grids of problems, modes and
//! seeds, tabulate final metrics and sweep hyperparameters.
//!
//! Each run writes a directory named `<section>-<mode>-s<seed>` holding
//! `run.json` (the full run record), `front.csv` (the final non-dominated
//! objective vectors), `checkpoint.bin` (network parameters) and, with plots
//! enabled, `front.svg`.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("run {run} aborted: {source}")]
    Numerical {
        run: String,
        #[source]
        source: ddps::Error,
    },
    #[error("{0}")]
    Io(String),
    #[error("no readable runs among the given directories")]
    NothingToTabulate,
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::NothingToTabulate => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
