//! Experiment runner for the OEO optimizers: reads a TOML experiment,
//! runs every (algorithm, seed) pair in parallel, and writes one trace CSV
//! per run plus `summary.csv` and `manifest.jsonl`.

pub mod config;
pub mod experiment;
pub mod summary;

pub use config::{load_experiment, AlgorithmSettings, Experiment, ExperimentFile, ObjectiveSpec, RunSpec};
pub use experiment::{execute_run, replay_manifest, run_experiment, ManifestEntry, RunOutput};
pub use summary::{
    final_cost_of_trace, summarize, summarize_dir, summarize_traces, SummaryRow, TraceSummary, SUMMARY_HEADER,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code: 2 for bad input, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) | Self::Io(_) => 3,
        }
    }
}

impl From<oeo_core::OeoError> for CliError {
    fn from(e: oeo_core::OeoError) -> Self {
        Self::Runtime(e.to_string())
    }
}
