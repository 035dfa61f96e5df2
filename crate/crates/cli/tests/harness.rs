//! Round trips and smoke runs of the experiment harness.

use std::path::PathBuf;

use approx::assert_relative_eq;
use nalgebra::DMatrix;

use lna_mcmc::samplers::{SamplerConfig, SamplerKind};
use lna_mcmc::sim::Dataset;
use lna_mcmc_cli::io::{
    read_dataset_csv, read_samples_csv, write_dataset_csv, write_samples_csv, FileMeta,
};
use lna_mcmc_cli::{compare_samplers, run_experiment, ExperimentConfig, PriorConfig, TimeGrid};

fn tiny_config(dir: PathBuf) -> ExperimentConfig {
    let mut sampler = SamplerConfig::new(SamplerKind::Smmala);
    sampler.n_burnin = 40;
    sampler.n_samples = 30;
    sampler.adapt_interval = 10;
    sampler.step_size = 0.5;
    ExperimentConfig {
        model_name: "decay-dimerization".into(),
        omega: 10.0,
        true_theta: vec![1.0, 0.2, 0.5, 0.04],
        times: TimeGrid { t0: 0.0, t_end: 2.0, dt: 0.5 },
        n_replicates: 3,
        init_means: vec![50.0, 0.0, 0.0],
        prior: PriorConfig::centered(4, 1.0),
        sampler,
        ode: lna_mcmc::ode::OdeConfig::with_tolerances(1e-6, 1e-8),
        seed: 7,
        output_dir: dir,
        dataset_path: None,
    }
}

#[test]
fn dataset_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ds = Dataset {
        times: vec![0.5, 1.0],
        n_replicates: 2,
        observations: vec![vec![vec![3, 0], vec![4, 1]], vec![vec![2, 2], vec![5, 0]]],
        omega: 2.5,
        model_name: "single-gene".into(),
    };
    let path = dir.path().join("ds.csv");
    let meta = FileMeta::new("dataset", 9, "cafe").with("model", "single-gene").with("omega", 2.5);
    write_dataset_csv(&path, &ds, &["R".into(), "P".into()], &meta).unwrap();
    let back = read_dataset_csv(&path).unwrap();
    assert_eq!(back.times, ds.times);
    assert_eq!(back.observations, ds.observations);
    assert_eq!(back.model_name, "single-gene");
    assert_relative_eq!(back.omega, 2.5);
}

#[test]
fn samples_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let samples = DMatrix::from_row_slice(3, 2, &[0.1, -0.2, 0.30000000000000004, 1e-17, -3.5, 2.0]);
    let path = dir.path().join("samples.csv");
    let meta = FileMeta::new("samples", 3, "beef");
    write_samples_csv(&path, &samples, &["a".into(), "b".into()], &meta).unwrap();
    let (names, cols) = read_samples_csv(&path).unwrap();
    assert_eq!(names, vec!["log10_a", "log10_b"]);
    assert_eq!(cols[0], vec![0.1, 0.30000000000000004, -3.5]);
    assert_eq!(cols[1], vec![-0.2, 1e-17, 2.0]);
}

#[test]
fn config_json_round_trip_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path().to_path_buf());
    let path = dir.path().join("config.json");
    cfg.to_file(&path).unwrap();
    let back = ExperimentConfig::from_file(&path).unwrap();
    assert_eq!(back.hash(), cfg.hash());
    assert_eq!(back.model_name, cfg.model_name);
    assert_eq!(back.times.observation_times(), cfg.times.observation_times());

    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(other.hash(), cfg.hash());
}

#[test]
fn config_validation_catches_dimension_mismatches() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(dir.path().to_path_buf());
    cfg.true_theta.pop();
    assert!(cfg.build_model().is_err());

    let mut cfg = tiny_config(dir.path().to_path_buf());
    cfg.model_name = "unknown".into();
    assert!(cfg.build_model().is_err());

    let mut cfg = tiny_config(dir.path().to_path_buf());
    cfg.init_means = vec![1.0];
    assert!(cfg.build_model().is_err());
}

#[test]
fn run_experiment_produces_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path().to_path_buf());
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.sampler, "smmala");
    assert_eq!(report.params.len(), 4);
    assert!(report.min_ess > 0.0);
    for file in ["config.json", "dataset.csv", "samples.csv", "summary.json"] {
        assert!(dir.path().join(file).exists(), "{file} missing");
    }
    // summary means are the arithmetic mean of the natural-scale samples
    let (_, cols) = read_samples_csv(&dir.path().join("samples.csv")).unwrap();
    let direct = cols[0].iter().map(|v| 10f64.powf(*v)).sum::<f64>() / cols[0].len() as f64;
    assert_relative_eq!(report.params[0].mean, direct, max_relative = 1e-12);
}

#[test]
fn run_experiment_is_byte_reproducible() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let mut cfg_a = tiny_config(dir_a.path().to_path_buf());
    let mut cfg_b = tiny_config(dir_b.path().to_path_buf());
    // the output directory is part of the config document but must not
    // influence the artifacts' bytes
    cfg_a.output_dir = dir_a.path().to_path_buf();
    cfg_b.output_dir = dir_b.path().to_path_buf();
    run_experiment(&cfg_a).unwrap();
    run_experiment(&cfg_b).unwrap();
    for file in ["dataset.csv", "samples.csv"] {
        let a = std::fs::read(dir_a.path().join(file)).unwrap();
        let b = std::fs::read(dir_b.path().join(file)).unwrap();
        // bytes differ only through the config hash, which covers the
        // output directory; compare after stripping the comment line
        let strip = |v: &[u8]| {
            let s = String::from_utf8(v.to_vec()).unwrap();
            s.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
        };
        assert_eq!(strip(&a), strip(&b), "{file} differs");
    }
}

#[test]
fn reusing_a_dataset_file_gives_identical_inference() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path().to_path_buf());
    let first = run_experiment(&cfg).unwrap();

    let dir2 = tempfile::tempdir().unwrap();
    let mut cfg2 = tiny_config(dir2.path().to_path_buf());
    cfg2.dataset_path = Some(dir.path().join("dataset.csv"));
    let second = run_experiment(&cfg2).unwrap();
    for (a, b) in first.params.iter().zip(&second.params) {
        assert_eq!(a.mean_log10, b.mean_log10);
    }
}

#[test]
fn compare_with_single_kind_yields_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(dir.path().to_path_buf());
    cfg.sampler.kind = SamplerKind::Mh;
    cfg.sampler.step_size = 0.3;
    let rows = compare_samplers(&cfg, &[SamplerKind::Mh]).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].sampler, "mh");
    assert_eq!(rows[0].status, "ok");
    assert!(dir.path().join("comparison.csv").exists());
    assert!(dir.path().join("samples_mh.csv").exists());
    assert!(dir.path().join("summary_mh.json").exists());
}
