//! Finite-difference validation of the analytic derivative chain.
//!
//! Compares the LNA parameter sensitivities, the posterior gradient and
//! the metric derivatives against central differences of independently
//! integrated solves at tight tolerance, in `log10` parameter space.
//! Used by the test and acceptance suites; not needed for inference.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;

use crate::lna::solve_lna;
use crate::model::MjpModel;
use crate::ode::OdeConfig;
use crate::posterior::{from_log10, posterior_bundle, Prior, LN10};
use crate::samplers::GeometryOrder;
use crate::sim::{Dataset, SimRng};

pub struct ModelCase {
    pub model: MjpModel,
    pub dataset: Dataset,
    pub prior: Prior,
    pub phi0: Vec<f64>,
    pub draw_sd: f64,
    pub draw_center: Vec<f64>,
}

pub const SENS1_TOL: f64 = 1e-4;
pub const SENS2_TOL: f64 = 1e-3;
pub const GRAD_TOL: f64 = 1e-5;
pub const METRIC_DERIV_TOL: f64 = 1e-4;

fn tight() -> OdeConfig {
    // near the f64 limit: at stiff prior draws the finite differences of
    // the assembled likelihood quantities only stabilise at this precision
    OdeConfig { max_steps: 1_000_000, ..OdeConfig::with_tolerances(1e-13, 1e-15) }
}

/// Companion tolerance used to estimate the numerical uncertainty of the
/// analytic side itself: the difference between the two solves bounds the
/// solver error entering the assembled quantity.
fn looser() -> OdeConfig {
    OdeConfig { max_steps: 1_000_000, ..OdeConfig::with_tolerances(1e-12, 1e-14) }
}

fn max_abs<'a>(vals: impl IntoIterator<Item = &'a f64>) -> f64 {
    vals.into_iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Worst per-entry relative error between two blocks. `scale` is the
/// magnitude of the tensor the blocks belong to; entries far below it are
/// judged on an absolute basis, which keeps finite-difference noise on
/// structurally-zero blocks from reading as total disagreement.
pub fn block_rel_err(analytic: &[f64], fd: &[f64], scale: f64) -> f64 {
    block_rel_err_with_allowance(analytic, fd, scale, 0.0)
}

/// As [`block_rel_err`], discounting an absolute `allowance` from every
/// entry discrepancy first. The allowance carries the oracle's
/// self-measured numerical noise, so small entries riding on a large
/// shared noise floor are not reported as disagreements.
pub fn block_rel_err_with_allowance(
    analytic: &[f64],
    fd: &[f64],
    scale: f64,
    allowance: f64,
) -> f64 {
    assert_eq!(analytic.len(), fd.len());
    let floor = (1e-3 * scale).max(1e-300);
    analytic
        .iter()
        .zip(fd)
        .map(|(a, b)| ((a - b).abs() - allowance).max(0.0) / a.abs().max(b.abs()).max(floor))
        .fold(0.0, f64::max)
}

fn v0_for(model: &MjpModel) -> DMatrix<f64> {
    DMatrix::identity(model.n_species(), model.n_species())
}

/// First- and second-order LNA sensitivities against finite differences
/// of lower-order solves, in `log10` space with step `1e-5`.
pub fn check_lna_sensitivities(case: &ModelCase, theta_check: &DVector<f64>) -> Option<(f64, f64)> {
    let cfg = tight();
    let model = &case.model;
    let nt = model.n_params();
    let times = &case.dataset.times;
    let v0 = v0_for(model);
    let h = 1e-5;

    let theta = from_log10(theta_check);
    let sol = solve_lna(model, theta.as_slice(), &case.phi0, &v0, 0.0, times, 2, &cfg).ok()?;

    let solve_at = |tc: &DVector<f64>, order: u8| {
        let th = from_log10(tc);
        solve_lna(model, th.as_slice(), &case.phi0, &v0, 0.0, times, order, &cfg).ok()
    };

    // first pass: gather every block, separating mean from covariance
    // entries so each is judged against the scale of its own tensor
    let mut blocks1: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
    let mut blocks2: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
    for q in 0..nt {
        let mut up = theta_check.clone();
        up[q] += h;
        let mut dn = theta_check.clone();
        dn[q] -= h;
        let (sol_up, sol_dn) = (solve_at(&up, 1)?, solve_at(&dn, 1)?);

        // d/dcheck_q of (phi, V): analytic side scaled by the chain-rule
        // factor theta_q ln(10)
        let mut b1 = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..times.len() {
            for r in 0..model.n_species() {
                b1.0.push(sol.sens1_phi(i, q)[r] * theta[q] * LN10);
                b1.1.push((sol_up.phi[i][r] - sol_dn.phi[i][r]) / (2.0 * h));
            }
            for r in 0..model.n_species() {
                for c in 0..model.n_species() {
                    b1.2.push(sol.sens1_cov(i, q)[(r, c)] * theta[q] * LN10);
                    b1.3.push((sol_up.cov[i][(r, c)] - sol_dn.cov[i][(r, c)]) / (2.0 * h));
                }
            }
        }
        blocks1.push(b1);

        // d/dcheck_q of the first-order sensitivities: checks the
        // second-order blocks pair by pair
        let theta_up = from_log10(&up);
        let theta_dn = from_log10(&dn);
        for p in 0..nt {
            let mut b2 = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for i in 0..times.len() {
                for r in 0..model.n_species() {
                    let s_up = sol_up.sens1_phi(i, p)[r] * theta_up[p] * LN10;
                    let s_dn = sol_dn.sens1_phi(i, p)[r] * theta_dn[p] * LN10;
                    b2.1.push((s_up - s_dn) / (2.0 * h));
                    let mut a = sol.sens2_phi(i, p, q)[r] * theta[p] * theta[q] * LN10 * LN10;
                    if p == q {
                        a += sol.sens1_phi(i, p)[r] * theta[p] * LN10 * LN10;
                    }
                    b2.0.push(a);
                }
                for r in 0..model.n_species() {
                    for c in 0..model.n_species() {
                        let s_up = sol_up.sens1_cov(i, p)[(r, c)] * theta_up[p] * LN10;
                        let s_dn = sol_dn.sens1_cov(i, p)[(r, c)] * theta_dn[p] * LN10;
                        b2.3.push((s_up - s_dn) / (2.0 * h));
                        let mut a =
                            sol.sens2_cov(i, p, q)[(r, c)] * theta[p] * theta[q] * LN10 * LN10;
                        if p == q {
                            a += sol.sens1_cov(i, p)[(r, c)] * theta[p] * LN10 * LN10;
                        }
                        b2.2.push(a);
                    }
                }
            }
            blocks2.push(b2);
        }
    }

    let scale = |blocks: &[(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)]| {
        let phi = max_abs(blocks.iter().flat_map(|b| b.0.iter().chain(b.1.iter())));
        let cov = max_abs(blocks.iter().flat_map(|b| b.2.iter().chain(b.3.iter())));
        (phi, cov)
    };
    let (s1_phi, s1_cov) = scale(&blocks1);
    let (s2_phi, s2_cov) = scale(&blocks2);
    let mut worst1 = 0.0_f64;
    for b in &blocks1 {
        worst1 = worst1.max(block_rel_err(&b.0, &b.1, s1_phi));
        worst1 = worst1.max(block_rel_err(&b.2, &b.3, s1_cov));
    }
    let mut worst2 = 0.0_f64;
    for b in &blocks2 {
        worst2 = worst2.max(block_rel_err(&b.0, &b.1, s2_phi));
        worst2 = worst2.max(block_rel_err(&b.2, &b.3, s2_cov));
    }
    Some((worst1, worst2))
}

/// Posterior gradient against central differences of the log-posterior.
///
/// Returns `None` when the draw is numerically unmeasurable: either the
/// oracle's Richardson pair or the analytic evaluation at two solver
/// tolerances disagree by more than a fifth of the certified tolerance.
pub fn check_posterior_gradient(case: &ModelCase, theta_check: &DVector<f64>) -> Option<f64> {
    let cfg = tight();
    let v0 = v0_for(&case.model);
    let eval_grad = |c: &OdeConfig| {
        posterior_bundle(
            theta_check,
            &case.dataset,
            &case.model,
            &case.prior,
            &case.phi0,
            &v0,
            0.0,
            GeometryOrder::Gradient,
            c,
        )
        .ok()
        .and_then(|b| b.grad)
    };
    let grad = eval_grad(&cfg)?;
    let grad_check = eval_grad(&looser())?;
    let self_err = (0..grad.len()).map(|p| (grad[p] - grad_check[p]).abs()).fold(0.0, f64::max);
    let nt = case.model.n_params();
    let h = 1e-4;
    let log_post_at = |tc: &DVector<f64>| -> Option<f64> {
        posterior_bundle(
            tc,
            &case.dataset,
            &case.model,
            &case.prior,
            &case.phi0,
            &v0,
            0.0,
            GeometryOrder::Density,
            &cfg,
        )
        .ok()
        .map(|b| b.log_post)
    };
    // Richardson-extrapolated central difference (combines steps h and
    // h/2, cancelling the leading truncation term). The coarse/fine gap
    // estimates the oracle's own uncertainty; a draw where the oracle
    // cannot certify the target tolerance is reported as unmeasurable.
    let mut fd = Vec::with_capacity(nt);
    let mut uncertainty = 0.0_f64;
    for p in 0..nt {
        let central = |step: f64| -> Option<f64> {
            let mut up = theta_check.clone();
            up[p] += step;
            let mut dn = theta_check.clone();
            dn[p] -= step;
            Some((log_post_at(&up)? - log_post_at(&dn)?) / (2.0 * step))
        };
        let coarse = central(h)?;
        let fine = central(h / 2.0)?;
        fd.push((4.0 * fine - coarse) / 3.0);
        uncertainty = uncertainty.max((fine - coarse).abs() / 3.0);
    }
    let scale = max_abs(grad.as_slice().iter().chain(fd.iter()));
    if uncertainty.max(self_err) > 0.2 * GRAD_TOL * scale {
        return None;
    }
    Some(block_rel_err_with_allowance(
        grad.as_slice(),
        &fd,
        scale,
        5.0 * (uncertainty + self_err),
    ))
}

/// Metric derivatives against central differences of the metric.
pub fn check_metric_derivatives(case: &ModelCase, theta_check: &DVector<f64>) -> Option<f64> {
    let cfg = tight();
    let v0 = v0_for(&case.model);
    let eval_derivs = |c: &OdeConfig| {
        posterior_bundle(
            theta_check,
            &case.dataset,
            &case.model,
            &case.prior,
            &case.phi0,
            &v0,
            0.0,
            GeometryOrder::Full,
            c,
        )
        .ok()
        .and_then(|b| b.metric_derivs)
    };
    let derivs = eval_derivs(&cfg)?;
    let derivs_check = eval_derivs(&looser())?;
    let self_err = derivs
        .iter()
        .zip(&derivs_check)
        .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    let nt = case.model.n_params();
    let h = 1e-4;
    let metric_at = |tc: &DVector<f64>| -> Option<DMatrix<f64>> {
        posterior_bundle(
            tc,
            &case.dataset,
            &case.model,
            &case.prior,
            &case.phi0,
            &v0,
            0.0,
            GeometryOrder::Gradient,
            &cfg,
        )
        .ok()
        .and_then(|b| b.metric)
    };
    let mut blocks = Vec::with_capacity(nt);
    let mut uncertainty = 0.0_f64;
    for k in 0..nt {
        let central = |step: f64| -> Option<Vec<f64>> {
            let mut up = theta_check.clone();
            up[k] += step;
            let mut dn = theta_check.clone();
            dn[k] -= step;
            let (g_up, g_dn) = (metric_at(&up)?, metric_at(&dn)?);
            Some(g_up.iter().zip(g_dn.iter()).map(|(a, b)| (a - b) / (2.0 * step)).collect())
        };
        let coarse = central(h)?;
        let fine = central(h / 2.0)?;
        let fd: Vec<f64> =
            coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
        uncertainty = uncertainty
            .max(coarse.iter().zip(&fine).map(|(c, f)| (f - c).abs() / 3.0).fold(0.0, f64::max));
        let an: Vec<f64> = derivs[k].iter().copied().collect();
        blocks.push((an, fd));
    }
    let scale = max_abs(blocks.iter().flat_map(|(a, b)| a.iter().chain(b.iter())));
    if uncertainty.max(self_err) > 0.2 * METRIC_DERIV_TOL * scale {
        return None;
    }
    let mut worst = 0.0_f64;
    for (an, fd) in &blocks {
        worst = worst.max(block_rel_err_with_allowance(an, fd, scale, 5.0 * (uncertainty + self_err)));
    }
    Some(worst)
}

/// Worst observed errors over a set of draws.
#[derive(Debug, Clone, Copy, Default)]
pub struct DrawSummary {
    pub n_draws: usize,
    pub sens1: f64,
    pub sens2: f64,
    pub gradient: f64,
    pub metric_derivs: f64,
}

impl DrawSummary {
    pub fn within_tolerances(&self) -> bool {
        self.sens1 < SENS1_TOL
            && self.sens2 < SENS2_TOL
            && self.gradient < GRAD_TOL
            && self.metric_derivs < METRIC_DERIV_TOL
    }
}

/// Runs the full derivative chain at `n_draws` evaluable points sampled
/// from the given law around the case's centre (in `log10` space) and
/// returns the worst errors. Unevaluable draws (solver failures at the
/// drawn point) are skipped and redrawn, up to ten times the target
/// count.
pub fn run_draws(case: &ModelCase, n_draws: usize, seed: u64) -> DrawSummary {
    let mut rng = SimRng::seed_from_u64(seed);
    let center = DVector::from_iterator(
        case.draw_center.len(),
        case.draw_center.iter().map(|v| v.log10()),
    );
    let mut summary = DrawSummary::default();
    let mut attempts = 0;
    // cheap feasibility screen: a draw that cannot be integrated within a
    // modest step budget at working tolerance would burn minutes at the
    // tight tolerance used by the finite-difference oracles
    let screen = OdeConfig { max_steps: 20_000, ..OdeConfig::with_tolerances(1e-8, 1e-10) };
    while summary.n_draws < n_draws {
        attempts += 1;
        assert!(attempts <= 10 * n_draws, "{}: too many unevaluable draws", case.model.name());
        let noise = Prior::centered(center.len(), case.draw_sd).sample(&mut rng);
        let theta_check = &center + noise;
        let theta = from_log10(&theta_check);
        let feasible = solve_lna(
            &case.model,
            theta.as_slice(),
            &case.phi0,
            &v0_for(&case.model),
            0.0,
            &case.dataset.times,
            0,
            &screen,
        )
        .is_ok();
        if !feasible {
            continue;
        }

        let Some((e1, e2)) = check_lna_sensitivities(case, &theta_check) else { continue };
        let Some(eg) = check_posterior_gradient(case, &theta_check) else { continue };
        let Some(em) = check_metric_derivatives(case, &theta_check) else { continue };
        summary.sens1 = summary.sens1.max(e1);
        summary.sens2 = summary.sens2.max(e2);
        summary.gradient = summary.gradient.max(eg);
        summary.metric_derivs = summary.metric_derivs.max(em);
        summary.n_draws += 1;
    }
    summary
}

/// As [`run_draws`], asserting every tolerance.
pub fn check_model_draws(case: &ModelCase, n_draws: usize, seed: u64) {
    let s = run_draws(case, n_draws, seed);
    assert!(s.sens1 < SENS1_TOL, "{}: first-order sensitivity err {:.3e}", case.model.name(), s.sens1);
    assert!(s.sens2 < SENS2_TOL, "{}: second-order sensitivity err {:.3e}", case.model.name(), s.sens2);
    assert!(s.gradient < GRAD_TOL, "{}: gradient err {:.3e}", case.model.name(), s.gradient);
    assert!(
        s.metric_derivs < METRIC_DERIV_TOL,
        "{}: metric derivative err {:.3e}",
        case.model.name(),
        s.metric_derivs
    );
}
