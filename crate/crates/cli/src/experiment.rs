//! The end-to-end harness: dataset preparation, chain execution,
//! summaries and artifact persistence.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use lna_mcmc::diagnostics::{summarize, ParamSummary};
use lna_mcmc::model::MjpModel;
use lna_mcmc::posterior::LnaPosterior;
use lna_mcmc::samplers::{run_chain, ChainOutput, SamplerKind};
use lna_mcmc::sim::{generate_dataset, Dataset, SimRng};

use crate::config::ExperimentConfig;
use crate::io::{read_dataset_csv, write_dataset_csv, write_samples_csv, FileMeta};
use crate::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryReport {
    pub model_name: String,
    pub sampler: String,
    pub seed: u64,
    pub config_hash: String,
    pub n_burnin: usize,
    pub n_samples: usize,
    pub acceptance_rate: f64,
    pub min_ess: f64,
    pub ess_per_second: f64,
    pub sampling_wall_time_s: f64,
    pub burnin_wall_time_s: f64,
    /// Step size after burn-in adaptation.
    pub final_step_size: f64,
    /// Per-parameter scales after adaptation (MH only).
    pub final_scales: Option<Vec<f64>>,
    pub params: Vec<ParamSummary>,
    pub config: ExperimentConfig,
}

impl SummaryReport {
    pub fn param(&self, name: &str) -> &ParamSummary {
        self.params
            .iter()
            .find(|p| p.name == name)
            .unwrap_or_else(|| panic!("no parameter named {name}"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub sampler: String,
    pub status: String,
    pub min_ess: f64,
    pub ess_per_second: f64,
    pub acceptance_rate: f64,
    pub sampling_wall_time_s: f64,
}

/// Loads the configured dataset file or simulates a fresh one (writing it
/// to `dataset.csv` in the output directory).
pub fn prepare_dataset(config: &ExperimentConfig, model: &MjpModel) -> Result<Dataset> {
    if let Some(path) = &config.dataset_path {
        let ds = read_dataset_csv(path)?;
        if ds.model_name != config.model_name {
            return Err(CliError::Config(format!(
                "dataset was generated for model '{}', config wants '{}'",
                ds.model_name, config.model_name
            )));
        }
        if (ds.omega - config.omega).abs() > 1e-12 * config.omega {
            return Err(CliError::Config("dataset and config disagree on omega".into()));
        }
        return Ok(ds);
    }
    let rng = SimRng::seed_from_u64(config.seed);
    let ds = generate_dataset(
        model,
        &config.true_theta,
        &config.times.observation_times(),
        config.n_replicates,
        &config.init_means,
        &rng,
    )?;
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| CliError::io(&config.output_dir, e))?;
    let meta = FileMeta::new("dataset", config.seed, &config.hash())
        .with("model", &config.model_name)
        .with("omega", config.omega);
    write_dataset_csv(
        &config.output_dir.join("dataset.csv"),
        &ds,
        model.species_names(),
        &meta,
    )?;
    Ok(ds)
}

/// Assembles the posterior target: LNA initial mean at the scaled initial
/// counts and identity initial covariance.
pub fn build_target(
    config: &ExperimentConfig,
    model: Arc<MjpModel>,
    dataset: Dataset,
) -> Result<LnaPosterior> {
    let d = model.n_species();
    let phi0: Vec<f64> = config.init_means.iter().map(|m| m / config.omega).collect();
    let target = LnaPosterior::new(
        model,
        dataset,
        config.prior.to_prior()?,
        phi0,
        DMatrix::identity(d, d),
        config.times.t0,
        config.ode,
    )?;
    Ok(target)
}

fn summarise_run(
    config: &ExperimentConfig,
    kind: SamplerKind,
    output: &ChainOutput,
    names: &[String],
) -> Result<SummaryReport> {
    let summary = summarize(output, names)?;
    Ok(SummaryReport {
        model_name: config.model_name.clone(),
        sampler: kind.as_str().to_string(),
        seed: output.seed,
        config_hash: config.hash(),
        n_burnin: output.final_config.n_burnin,
        n_samples: output.final_config.n_samples,
        acceptance_rate: output.acceptance_rate,
        min_ess: summary.min_ess,
        ess_per_second: summary.ess_per_second,
        sampling_wall_time_s: output.wall_time,
        burnin_wall_time_s: output.burnin_wall_time,
        final_step_size: output.final_config.step_size,
        final_scales: output.final_config.scales.clone(),
        params: summary.params,
        config: config.clone(),
    })
}

fn write_summary(path: &Path, report: &SummaryReport) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

fn write_error_report(dir: &Path, name: &str, message: &str, config: &ExperimentConfig) {
    let body = serde_json::json!({
        "error": message,
        "seed": config.seed,
        "config_hash": config.hash(),
    });
    let path = dir.join(name);
    let _ = std::fs::write(&path, serde_json::to_string_pretty(&body).unwrap_or_default());
}

/// Runs one sampler on a prepared dataset, persisting samples and summary
/// with the given file suffix.
fn run_one(
    config: &ExperimentConfig,
    model: Arc<MjpModel>,
    dataset: Dataset,
    kind: SamplerKind,
    chain_seed: u64,
    suffix: &str,
) -> Result<SummaryReport> {
    let mut sampler_cfg = config.sampler.clone();
    if sampler_cfg.kind != kind {
        // a comparison run re-targets the kernel; the acceptance band
        // follows the kernel, not the configured one
        sampler_cfg.kind = kind;
        sampler_cfg.target_acceptance = kind.default_target_acceptance();
    }
    let names = model.param_names().to_vec();
    let target = build_target(config, model, dataset)?;

    let output = run_chain(&target, &sampler_cfg, None, chain_seed).map_err(|e| {
        write_error_report(
            &config.output_dir,
            &format!("error{suffix}.json"),
            &e.to_string(),
            config,
        );
        CliError::ChainAbort(e.to_string())
    })?;

    let meta = FileMeta::new("samples", chain_seed, &config.hash())
        .with("model", &config.model_name)
        .with("sampler", kind.as_str());
    write_samples_csv(
        &config.output_dir.join(format!("samples{suffix}.csv")),
        &output.samples,
        &names,
        &meta,
    )?;
    let report = summarise_run(config, kind, &output, &names)?;
    write_summary(&config.output_dir.join(format!("summary{suffix}.json")), &report)?;
    Ok(report)
}

/// Generates (or loads) the dataset, runs the configured chain and writes
/// `dataset.csv`, `samples.csv`, `summary.json` and a `config.json` echo
/// into the output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SummaryReport> {
    let model = config.build_model()?;
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| CliError::io(&config.output_dir, e))?;
    config.to_file(&config.output_dir.join("config.json"))?;
    let dataset = prepare_dataset(config, &model)?;
    run_one(config, model, dataset, config.sampler.kind, config.seed, "")
}

/// Runs several samplers on the identical dataset and writes a comparison
/// CSV next to the per-sampler artifacts. Failed runs are recorded as
/// `error` rows and the comparison continues.
pub fn compare_samplers(
    config: &ExperimentConfig,
    kinds: &[SamplerKind],
) -> Result<Vec<ComparisonRow>> {
    if kinds.is_empty() {
        return Err(CliError::Config("no samplers requested".into()));
    }
    let model = config.build_model()?;
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| CliError::io(&config.output_dir, e))?;
    config.to_file(&config.output_dir.join("config.json"))?;
    let dataset = prepare_dataset(config, &model)?;

    let results: Vec<(SamplerKind, Result<SummaryReport>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = kinds
            .iter()
            .enumerate()
            .map(|(idx, kind)| {
                let model = Arc::clone(&model);
                let dataset = dataset.clone();
                let kind = *kind;
                scope.spawn(move || {
                    let seed = config.seed.wrapping_add(idx as u64);
                    let suffix = format!("_{}", kind.as_str());
                    (kind, run_one(config, model, dataset, kind, seed, &suffix))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sampler thread panicked")).collect()
    });

    let mut rows = Vec::with_capacity(results.len());
    for (kind, result) in &results {
        rows.push(match result {
            Ok(report) => ComparisonRow {
                sampler: kind.as_str().to_string(),
                status: "ok".into(),
                min_ess: report.min_ess,
                ess_per_second: report.ess_per_second,
                acceptance_rate: report.acceptance_rate,
                sampling_wall_time_s: report.sampling_wall_time_s,
            },
            Err(err) => ComparisonRow {
                sampler: kind.as_str().to_string(),
                status: format!("error: {err}"),
                min_ess: f64::NAN,
                ess_per_second: f64::NAN,
                acceptance_rate: f64::NAN,
                sampling_wall_time_s: f64::NAN,
            },
        });
    }

    let mut text = FileMeta::new("comparison", config.seed, &config.hash())
        .with("model", &config.model_name)
        .line();
    text.push('\n');
    text.push_str("sampler,status,min_ess,ess_per_second,acceptance_rate,sampling_wall_time_s\n");
    for row in &rows {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.sampler,
            row.status.replace(',', ";"),
            row.min_ess,
            row.ess_per_second,
            row.acceptance_rate,
            row.sampling_wall_time_s
        ));
    }
    let path = config.output_dir.join("comparison.csv");
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(rows)
}
