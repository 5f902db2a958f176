//! Scenario runner for the `ellipspin` library: configuration files,
//! simulations, parameter sweeps and self-verification.

pub mod commands;
pub mod config;
pub mod verify;

pub use config::{ConfigError, GridPoint, Scenario, SweepConfig};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const VERIFICATION_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const RUNTIME: i32 = 3;
}

/// Failure of a CLI command.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("integration failed after last good tau = {last_tau}: {reason}")]
    Integration { last_tau: f64, reason: String },
    #[error("{0}")]
    Library(ellipspin::Error),
}

impl From<ellipspin::Error> for CliError {
    fn from(e: ellipspin::Error) -> Self {
        match e {
            ellipspin::Error::Integration { last_tau, reason } => {
                CliError::Integration { last_tau, reason }
            }
            other => CliError::Library(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => exit::CONFIG,
            CliError::Io(_) | CliError::Integration { .. } | CliError::Library(_) => exit::RUNTIME,
        }
    }
}
