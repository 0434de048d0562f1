//! Library side of the `mosci` command-line tool: configuration, ratings
//! ingestion, report formats and the four subcommands.

pub mod commands;
pub mod config;
pub mod ratings;
pub mod report;

use std::path::PathBuf;

pub use commands::{cmd_ci, cmd_recommend, cmd_simulate, cmd_sweep};
pub use config::{OutputFormat, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Row { path: PathBuf, line: u64, message: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Degenerate(String),
}

impl CliError {
    /// Process exit code: 2 for input or configuration problems, 3 when the
    /// computation itself is degenerate.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Degenerate(_) => 3,
            _ => 2,
        }
    }
}

impl From<mosci_core::Error> for CliError {
    fn from(e: mosci_core::Error) -> Self {
        match e {
            mosci_core::Error::Domain(m) => CliError::Input(m),
            mosci_core::Error::Degenerate(m) => CliError::Degenerate(m),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
