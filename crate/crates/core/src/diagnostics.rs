//! Effective sample size and posterior chain summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samplers::ChainOutput;

/// Effective sample size of one chain column.
///
/// `ESS = N / (1 + 2 * sum_k rho_k)` with the autocorrelation sum
/// truncated by Geyer's initial positive sequence: consecutive lag pairs
/// are added while their sum stays positive. The estimate is clamped to
/// `(0, N]`; a constant chain reports 1.
pub fn effective_sample_size(chain: &[f64]) -> Result<f64> {
    let n = chain.len();
    if n < 10 {
        return Err(Error::Domain(format!("need at least 10 samples for ESS, got {n}")));
    }
    if chain.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite sample in chain".into()));
    }
    let nf = n as f64;
    let mean = chain.iter().sum::<f64>() / nf;
    let autocov = |lag: usize| -> f64 {
        let mut acc = 0.0;
        for t in 0..n - lag {
            acc += (chain[t] - mean) * (chain[t + lag] - mean);
        }
        acc / nf
    };
    let gamma0 = autocov(0);
    if gamma0 <= 0.0 {
        return Ok(1.0);
    }

    // paired sums Gamma_m = rho_{2m} + rho_{2m+1}, kept while positive
    let mut sum = 0.0;
    let mut m = 0usize;
    loop {
        let even = 2 * m;
        let odd = even + 1;
        if odd >= n {
            break;
        }
        let rho_even = if even == 0 { 1.0 } else { autocov(even) / gamma0 };
        let rho_odd = autocov(odd) / gamma0;
        let pair = rho_even + rho_odd;
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        m += 1;
    }
    let tau = 2.0 * sum - 1.0;
    if tau <= 0.0 {
        return Ok(nf);
    }
    Ok((nf / tau).clamp(1.0, nf))
}

/// Per-parameter posterior summary. Means and standard deviations are
/// reported on the natural scale (moments of `10^x` over the chain) and
/// on the sampled `log10` scale; the ESS is computed on the sampled scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub mean_log10: f64,
    pub sd_log10: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSummary {
    pub params: Vec<ParamSummary>,
    pub min_ess: f64,
    /// Minimum ESS divided by the wall time of the sampling phase.
    pub ess_per_second: f64,
    pub acceptance_rate: f64,
    pub wall_time: f64,
}

fn moments(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.max(0.0).sqrt())
}

/// Summarises a finished chain. Chains shorter than the ESS estimator's
/// minimum report `ESS = 1` for constant columns and the sample count
/// otherwise.
pub fn summarize(output: &ChainOutput, names: &[String]) -> Result<ChainSummary> {
    let n = output.samples.nrows();
    let dim = output.samples.ncols();
    if n == 0 {
        return Err(Error::Domain("cannot summarise an empty chain".into()));
    }
    if names.len() != dim {
        return Err(Error::Domain("parameter name count mismatch".into()));
    }
    let mut params = Vec::with_capacity(dim);
    for p in 0..dim {
        let col: Vec<f64> = (0..n).map(|i| output.samples[(i, p)]).collect();
        let ess = if n >= 10 {
            effective_sample_size(&col)?
        } else if col.iter().all(|v| *v == col[0]) {
            1.0
        } else {
            n as f64
        };
        let (mean_log10, sd_log10) = moments(col.iter().copied());
        let (mean, sd) = moments(col.iter().map(|v| 10.0_f64.powf(*v)));
        params.push(ParamSummary { name: names[p].clone(), mean, sd, mean_log10, sd_log10, ess });
    }
    let min_ess = params.iter().map(|p| p.ess).fold(f64::INFINITY, f64::min);
    let ess_per_second =
        if output.wall_time > 0.0 { min_ess / output.wall_time } else { f64::INFINITY };
    Ok(ChainSummary {
        params,
        min_ess,
        ess_per_second,
        acceptance_rate: output.acceptance_rate,
        wall_time: output.wall_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{SamplerConfig, SamplerKind};
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn chain_output(samples: DMatrix<f64>) -> ChainOutput {
        ChainOutput {
            samples,
            acceptance_rate: 0.5,
            wall_time: 2.0,
            burnin_wall_time: 0.0,
            final_config: SamplerConfig::new(SamplerKind::Mh),
            seed: 0,
        }
    }

    #[test]
    fn iid_chain_has_near_nominal_ess() {
        let mut rng = crate::SimRng::seed_from_u64(1);
        let n = 10_000;
        let x: Vec<f64> = (0..n)
            .map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng))
            .collect();
        let ess = effective_sample_size(&x).unwrap();
        assert!(ess >= 0.9 * n as f64 && ess <= 1.1 * n as f64, "ess {ess}");
    }

    #[test]
    fn constant_chain_reports_one() {
        let x = vec![3.25; 100];
        assert_eq!(effective_sample_size(&x).unwrap(), 1.0);
    }

    #[test]
    fn ar1_chain_matches_analytic_autocorrelation_time() {
        // AR(1) with coefficient rho has ESS = N (1 - rho) / (1 + rho)
        let rho: f64 = 0.9;
        let n = 100_000;
        let mut rng = crate::SimRng::seed_from_u64(2);
        let mut x = Vec::with_capacity(n);
        let mut state = 0.0;
        let innov_sd = (1.0 - rho * rho).sqrt();
        for _ in 0..n {
            let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            state = rho * state + innov_sd * z;
            x.push(state);
        }
        let ess = effective_sample_size(&x).unwrap();
        let expected = n as f64 * (1.0 - rho) / (1.0 + rho);
        assert!(
            (ess - expected).abs() / expected < 0.15,
            "ess {ess} vs expected {expected}"
        );
    }

    #[test]
    fn short_chains_need_ten_samples() {
        assert!(effective_sample_size(&[1.0; 5]).is_err());
    }

    proptest! {
        // affine maps leave the autocorrelation structure unchanged
        #[test]
        fn ess_is_shift_scale_invariant(seed in 0u64..32, a in -5.0f64..5.0, b in 0.1f64..4.0) {
            let mut rng = crate::SimRng::seed_from_u64(seed);
            let mut x = Vec::with_capacity(500);
            let mut state = 0.0f64;
            for _ in 0..500 {
                let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
                state = 0.5 * state + z;
                x.push(state);
            }
            let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
            let e1 = effective_sample_size(&x).unwrap();
            let e2 = effective_sample_size(&y).unwrap();
            prop_assert!((e1 - e2).abs() <= 1e-9 * e1.max(1.0), "{e1} vs {e2}");
        }
    }

    #[test]
    fn summarize_reports_natural_scale_means() {
        let samples = DMatrix::from_element(50, 2, 1.0);
        let summary = summarize(&chain_output(samples), &["a".into(), "b".into()]).unwrap();
        assert_eq!(summary.params[0].mean, 10.0);
        assert_eq!(summary.params[0].sd, 0.0);
        assert_eq!(summary.params[0].ess, 1.0);
        assert_eq!(summary.min_ess, 1.0);
        assert!((summary.ess_per_second - 0.5).abs() < 1e-12);
    }

    #[test]
    fn summarize_natural_mean_is_mean_of_powers() {
        let mut rng = crate::SimRng::seed_from_u64(3);
        let samples = DMatrix::from_fn(200, 1, |_, _| rng.random_range(-1.0..1.0));
        let summary = summarize(&chain_output(samples.clone()), &["a".into()]).unwrap();
        let direct = (0..200).map(|i| 10.0f64.powf(samples[(i, 0)])).sum::<f64>() / 200.0;
        assert!((summary.params[0].mean - direct).abs() <= 1e-12 * direct);
    }
}
