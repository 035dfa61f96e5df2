//! Command-line interface: simulate datasets, run posterior inference,
//! compare samplers on a shared dataset, and compute effective sample
//! sizes of stored chains.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use lna_mcmc::diagnostics::effective_sample_size;
use lna_mcmc::samplers::SamplerKind;
use lna_mcmc::sim::{generate_dataset, SimRng};
use rand::SeedableRng;

use lna_mcmc_cli::io::{read_samples_csv, write_dataset_csv, FileMeta};
use lna_mcmc_cli::{compare_samplers, run_experiment, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "lna-mcmc",
    about = "Bayesian rate inference for Markov jump processes via the linear noise approximation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::from_file(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a replicate dataset and write it as CSV.
    Simulate(ConfigArgs),
    /// Generate (or load) a dataset and sample the posterior.
    Infer(ConfigArgs),
    /// Run several samplers on one dataset and tabulate mixing efficiency.
    Compare {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated sampler kinds (mh, smmala, mmala, rmhmc).
        #[arg(long, value_delimiter = ',')]
        samplers: Vec<String>,
    },
    /// Effective sample size per column of a samples CSV.
    Ess {
        /// Samples CSV produced by `infer` or `compare`.
        #[arg(long)]
        samples: PathBuf,
    },
}

fn simulate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let model = cfg.build_model()?;
    let rng = SimRng::seed_from_u64(cfg.seed);
    let dataset = generate_dataset(
        &model,
        &cfg.true_theta,
        &cfg.times.observation_times(),
        cfg.n_replicates,
        &cfg.init_means,
        &rng,
    )?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::io(&cfg.output_dir, e))?;
    let meta = FileMeta::new("dataset", cfg.seed, &cfg.hash())
        .with("model", &cfg.model_name)
        .with("omega", cfg.omega);
    let path = cfg.output_dir.join("dataset.csv");
    write_dataset_csv(&path, &dataset, model.species_names(), &meta)?;
    println!(
        "wrote {} ({} times x {} replicates)",
        path.display(),
        dataset.n_times(),
        dataset.n_replicates
    );
    Ok(())
}

fn run() -> Result<(), CliError> {
    match Cli::parse().command {
        Command::Simulate(args) => simulate(&args.load()?),
        Command::Infer(args) => {
            let cfg = args.load()?;
            let report = run_experiment(&cfg)?;
            println!(
                "sampler {} on {}: acceptance {:.3}, min ESS {:.1}, min ESS/s {:.2}",
                report.sampler,
                report.model_name,
                report.acceptance_rate,
                report.min_ess,
                report.ess_per_second
            );
            for p in &report.params {
                println!(
                    "  {:>10}: mean {:.6e} sd {:.3e} ess {:.1}",
                    p.name, p.mean, p.sd, p.ess
                );
            }
            Ok(())
        }
        Command::Compare { config, samplers } => {
            let cfg = config.load()?;
            let kinds = samplers
                .iter()
                .map(|s| SamplerKind::from_str(s).map_err(CliError::from))
                .collect::<Result<Vec<_>, _>>()?;
            let rows = compare_samplers(&cfg, &kinds)?;
            println!("sampler   status  min_ess  ess/s  acceptance");
            for r in &rows {
                println!(
                    "{:<9} {:<7} {:>8.1} {:>6.2} {:>10.3}",
                    r.sampler, r.status, r.min_ess, r.ess_per_second, r.acceptance_rate
                );
            }
            Ok(())
        }
        Command::Ess { samples } => {
            let (names, columns) = read_samples_csv(&samples)?;
            for (name, col) in names.iter().zip(&columns) {
                let ess = effective_sample_size(col)?;
                println!("{name}: ESS {ess:.1} of {}", col.len());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
