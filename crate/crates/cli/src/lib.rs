//! Front end for the `hotion` simulator: experiment configs in, JSON reports and
//! CSV tables out.

use std::path::PathBuf;

pub mod commands;
pub mod config;

pub use config::{ExperimentConfig, Format};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "HOTION_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("simulation: {0}")]
    Simulation(#[from] hotion::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 2 for usage and configuration problems, 3 when the simulation itself
    /// rejects its input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Simulation(_) => 3,
        }
    }
}

/// Full-precision float for CSV cells (17 significant digits).
pub fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}
