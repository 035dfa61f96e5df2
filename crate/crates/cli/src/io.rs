//! CSV and JSON artifact formats.
//!
//! CSV files start with one `#` comment line carrying provenance
//! (`key=value` pairs including the seed and the configuration hash),
//! followed by a header row. Floats are written with the shortest
//! round-trip decimal encoding, so identical runs produce byte-identical
//! files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use lna_mcmc::sim::Dataset;

use crate::{CliError, Result};

/// Provenance stamped into the comment line of every CSV artifact.
#[derive(Debug, Clone)]
pub struct FileMeta {
    pub kind: &'static str,
    pub fields: Vec<(String, String)>,
}

impl FileMeta {
    pub fn new(kind: &'static str, seed: u64, config_hash: &str) -> Self {
        Self {
            kind,
            fields: vec![
                ("seed".into(), seed.to_string()),
                ("config".into(), config_hash.to_string()),
            ],
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    pub(crate) fn line(&self) -> String {
        let mut s = format!("# lna-mcmc {}", self.kind);
        for (k, v) in &self.fields {
            let _ = write!(s, " {k}={v}");
        }
        s
    }
}

fn parse_meta(line: &str) -> BTreeMap<String, String> {
    line.trim_start_matches('#')
        .split_whitespace()
        .filter_map(|tok| tok.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub fn write_dataset_csv(path: &Path, dataset: &Dataset, species: &[String], meta: &FileMeta) -> Result<()> {
    let mut text = meta.line();
    text.push('\n');
    text.push_str("time,replicate");
    for s in species {
        let _ = write!(text, ",{s}");
    }
    text.push('\n');
    for (i, t) in dataset.times.iter().enumerate() {
        for (r, obs) in dataset.observations[i].iter().enumerate() {
            let _ = write!(text, "{t},{}", r + 1);
            for v in obs {
                let _ = write!(text, ",{v}");
            }
            text.push('\n');
        }
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |msg: &str| CliError::Config(format!("{}: {msg}", path.display()));

    let mut model_name = String::new();
    let mut omega = 1.0_f64;
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.peek() {
        if line.starts_with('#') {
            let meta = parse_meta(line);
            if let Some(m) = meta.get("model") {
                model_name = m.clone();
            }
            if let Some(o) = meta.get("omega") {
                omega = o.parse().map_err(|_| bad("bad omega in metadata"))?;
            }
            lines.next();
        } else {
            break;
        }
    }
    let header = lines.next().ok_or_else(|| bad("missing header"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "time" || cols[1] != "replicate" {
        return Err(bad("expected header time,replicate,<species...>"));
    }
    let n_species = cols.len() - 2;

    let mut times: Vec<f64> = Vec::new();
    let mut observations: Vec<Vec<Vec<i64>>> = Vec::new();
    for line in lines {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(bad("row width does not match header"));
        }
        let t: f64 = fields[0].parse().map_err(|_| bad("bad time value"))?;
        let mut obs = Vec::with_capacity(n_species);
        for f in &fields[2..] {
            obs.push(f.parse::<i64>().map_err(|_| bad("bad count value"))?);
        }
        if times.last().is_some_and(|last| (*last - t).abs() < 1e-12) {
            observations.last_mut().unwrap().push(obs);
        } else {
            times.push(t);
            observations.push(vec![obs]);
        }
    }
    if times.is_empty() {
        return Err(bad("no observations"));
    }
    let n_replicates = observations[0].len();
    if observations.iter().any(|row| row.len() != n_replicates) {
        return Err(bad("unequal replicate counts across times"));
    }
    let ds = Dataset { times, n_replicates, observations, omega, model_name };
    ds.validate(n_species)?;
    Ok(ds)
}

pub fn write_samples_csv(
    path: &Path,
    samples: &DMatrix<f64>,
    param_names: &[String],
    meta: &FileMeta,
) -> Result<()> {
    let mut text = meta.line();
    text.push('\n');
    let header: Vec<String> = param_names.iter().map(|n| format!("log10_{n}")).collect();
    text.push_str(&header.join(","));
    text.push('\n');
    for i in 0..samples.nrows() {
        for p in 0..samples.ncols() {
            if p > 0 {
                text.push(',');
            }
            let _ = write!(text, "{}", samples[(i, p)]);
        }
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Reads a samples CSV into named columns. Comment lines are skipped.
pub fn read_samples_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |msg: &str| CliError::Config(format!("{}: {msg}", path.display()));
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("missing header"))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            return Err(bad("row width does not match header"));
        }
        for (c, f) in fields.iter().enumerate() {
            columns[c].push(f.parse().map_err(|_| bad("bad sample value"))?);
        }
    }
    if columns.first().is_none_or(Vec::is_empty) {
        return Err(bad("no samples"));
    }
    Ok((names, columns))
}
