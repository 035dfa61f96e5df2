//! The experiment configuration document.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use lna_mcmc::model::{build_model, MjpModel};
use lna_mcmc::ode::OdeConfig;
use lna_mcmc::posterior::Prior;
use lna_mcmc::samplers::SamplerConfig;

use crate::{CliError, Result};

/// Uniform observation grid `t0 + dt, t0 + 2 dt, ..., t_end`; the initial
/// time itself is not observed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl TimeGrid {
    pub fn observation_times(&self) -> Vec<f64> {
        let n = ((self.t_end - self.t0) / self.dt).round() as usize;
        (1..=n).map(|i| self.t0 + self.dt * i as f64).collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end > self.t0) {
            return Err(CliError::Config("time grid requires dt > 0 and t_end > t0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriorConfig {
    /// Means of the independent normal prior in log10 space.
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl PriorConfig {
    /// Zero-mean prior with a shared standard deviation.
    pub fn centered(dim: usize, sd: f64) -> Self {
        Self { means: vec![0.0; dim], sds: vec![sd; dim] }
    }

    pub fn to_prior(&self) -> Result<Prior> {
        Prior::new(self.means.clone(), self.sds.clone()).map_err(CliError::from)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model_name: String,
    pub omega: f64,
    /// Data-generating rate parameters on the natural scale.
    pub true_theta: Vec<f64>,
    pub times: TimeGrid,
    pub n_replicates: usize,
    /// Poisson means of the initial molecule counts.
    pub init_means: Vec<f64>,
    pub prior: PriorConfig,
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub ode: OdeConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Reuse an existing dataset CSV instead of simulating a fresh one.
    #[serde(default)]
    pub dataset_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }

    /// Builds the model and checks every dimension against it.
    pub fn build_model(&self) -> Result<Arc<MjpModel>> {
        let model = build_model(&self.model_name, self.omega)?;
        self.times.validate()?;
        if self.true_theta.len() != model.n_params() {
            return Err(CliError::Config(format!(
                "model '{}' has {} parameters, config supplies {}",
                self.model_name,
                model.n_params(),
                self.true_theta.len()
            )));
        }
        if self.true_theta.iter().any(|v| !(*v > 0.0)) {
            return Err(CliError::Config("true_theta must be positive".into()));
        }
        if self.init_means.len() != model.n_species() {
            return Err(CliError::Config(format!(
                "model '{}' has {} species, init_means supplies {}",
                self.model_name,
                model.n_species(),
                self.init_means.len()
            )));
        }
        if self.prior.means.len() != model.n_params()
            || self.prior.sds.len() != model.n_params()
        {
            return Err(CliError::Config("prior dimensions do not match the model".into()));
        }
        if self.n_replicates == 0 {
            return Err(CliError::Config("need at least one replicate".into()));
        }
        self.sampler
            .validate(model.n_params())
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Arc::new(model))
    }

    /// Short hash of the canonical JSON encoding, stamped into every
    /// artifact this configuration produces.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(16);
        for b in digest.iter().take(8) {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }
}
