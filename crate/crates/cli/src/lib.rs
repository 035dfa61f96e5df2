//! Experiment configuration, artifact persistence and the end-to-end
//! harness behind the `lna-mcmc` command-line interface.
//!
//! An experiment is one JSON document: model, system size, true rates,
//! observation grid, prior, sampler settings and seed. [`run_experiment`]
//! generates (or loads) the dataset, runs the configured chain and writes
//! the dataset CSV, samples CSV and summary JSON into the output
//! directory; every artifact records the seed and a hash of the
//! configuration. [`compare_samplers`] repeats the inference on one shared
//! dataset across several kernels.

pub mod config;
pub mod experiment;
pub mod io;

pub use config::{ExperimentConfig, PriorConfig, TimeGrid};
pub use experiment::{compare_samplers, run_experiment, ComparisonRow, SummaryReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("chain aborted: {0}")]
    ChainAbort(String),

    #[error(transparent)]
    Core(#[from] lna_mcmc::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    /// Process exit code: 1 for configuration problems, 2 for aborted
    /// chains.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ChainAbort(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
