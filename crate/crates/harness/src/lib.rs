//! Replicated batch-BO experiments: configuration, seeded execution,
//! aggregation, CSV and SVG output, and the oracle suites behind the
//! `dppbo` command-line tool.

pub mod aggregate;
pub mod config;
pub mod oracle;
pub mod output;
pub mod plot;
pub mod runner;
pub mod seeds;

pub use aggregate::{aggregate, AggregateRow, AggregateStats};
pub use config::{ExperimentConfig, KernelConfig, ModelConfig, Surrogate};
pub use runner::{run_experiment, run_replication, RunRecord, RunRow};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] dppbo_core::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
