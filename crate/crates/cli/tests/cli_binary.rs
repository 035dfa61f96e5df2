//! End-to-end runs of the compiled binary: subcommands, flags and exit
//! codes.

use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lna-mcmc"))
}

fn write_tiny_config(dir: &std::path::Path) -> std::path::PathBuf {
    let config = serde_json::json!({
        "model_name": "decay-dimerization",
        "omega": 10.0,
        "true_theta": [1.0, 0.2, 0.5, 0.04],
        "times": { "t0": 0.0, "t_end": 2.0, "dt": 0.5 },
        "n_replicates": 2,
        "init_means": [50.0, 0.0, 0.0],
        "prior": { "means": [0.0, 0.0, 0.0, 0.0], "sds": [1.0, 1.0, 1.0, 1.0] },
        "sampler": {
            "kind": "mh",
            "step_size": 0.3,
            "leapfrog_steps": 5,
            "fixed_point_iters": 6,
            "n_burnin": 30,
            "n_samples": 20,
            "adapt_interval": 10,
            "target_acceptance": [0.25, 0.30]
        },
        "seed": 11,
        "output_dir": dir.join("out")
    });
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn simulate_then_infer_then_ess() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_tiny_config(dir.path());

    let out = binary().args(["simulate", "--config"]).arg(&config).output().unwrap();
    assert!(out.status.success(), "simulate failed: {}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/dataset.csv").exists());

    let out = binary().args(["infer", "--config"]).arg(&config).output().unwrap();
    assert!(out.status.success(), "infer failed: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("sampler mh"), "unexpected output: {stdout}");

    let out = binary()
        .args(["ess", "--samples"])
        .arg(dir.path().join("out/samples.csv"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("log10_c1"), "unexpected output: {stdout}");
}

#[test]
fn seed_and_output_dir_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_tiny_config(dir.path());
    let alt = dir.path().join("alt");
    let out = binary()
        .args(["infer", "--config"])
        .arg(&config)
        .args(["--seed", "99"])
        .arg("--output-dir")
        .arg(&alt)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let samples = std::fs::read_to_string(alt.join("samples.csv")).unwrap();
    assert!(samples.starts_with("# lna-mcmc samples seed=99"), "{samples:.80}");
}

#[test]
fn compare_runs_multiple_samplers() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_tiny_config(dir.path());
    let out = binary()
        .args(["compare", "--config"])
        .arg(&config)
        .args(["--samplers", "mh,smmala"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("out/comparison.csv")).unwrap();
    assert!(table.contains("mh,ok"), "{table}");
    assert!(table.contains("smmala,ok"), "{table}");
}

#[test]
fn bad_config_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ not json").unwrap();
    let out = binary().args(["infer", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = binary().args(["infer", "--config"]).arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_sampler_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_tiny_config(dir.path());
    let out = binary()
        .args(["compare", "--config"])
        .arg(&config)
        .args(["--samplers", "nuts"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
