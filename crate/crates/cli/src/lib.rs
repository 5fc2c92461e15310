//! Experiment harness: synthetic field files, unwrapping runs, timing
//! tables and dual traces.
//!
//! Exit codes are stable: 0 success, 1 usage error, 2 input error,
//! 3 nonconvergence (or a failed `verify` check).

pub mod commands;
pub mod config;
pub mod field_file;
pub mod solve;

pub use config::{ExperimentConfig, SolverChoice};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Input(#[from] unwrap_dd::Error),
    #[error("{0}")]
    Nonconvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(unwrap_dd::Error::InvalidParameter(_)) => 1,
            CliError::Input(_) => 2,
            CliError::Nonconvergence(_) => 3,
        }
    }
}
