//! Experiment runner for the hybrid pricing toolkit: configuration files,
//! built-in figure presets, and plot-ready CSV output.

pub mod config;
pub mod experiment;
pub mod output;
pub mod presets;

use std::path::PathBuf;

pub use config::{load_config, parse_config, DistributionSpec, ExperimentSpec, Sweep, SweepParam};
pub use experiment::run_experiment;
pub use output::{write_run, Manifest, Table};

/// Failures surfaced by the runner, grouped by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("computation failed: {0}")]
    Compute(#[from] tvws_pricing::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("output encoding failed: {0}")]
    Encode(String),
}

impl CliError {
    /// Process exit status: 1 for configuration problems, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
