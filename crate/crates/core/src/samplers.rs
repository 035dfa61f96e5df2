//! MCMC kernels over a generic target geometry.
//!
//! Four kernels: componentwise random-walk Metropolis (MH within Gibbs),
//! simplified manifold MALA (SMMALA, constant-curvature proposal), full
//! manifold MALA (MMALA, with the Christoffel drift correction) and
//! Riemann-manifold HMC (RMHMC) with an implicit generalised leapfrog
//! integrator. Proposal scales adapt geometrically during burn-in towards
//! the kernel's target acceptance band and are frozen afterwards, so the
//! sampled kernel is a fixed Markov kernel.
//!
//! Target evaluation failures (solver breakdown, indefinite metric) reject
//! the proposal; they never abort a running chain.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posterior::PosteriorBundle;
use crate::sim::SimRng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// RNG stream reserved for chains; dataset generation uses low stream ids.
const CHAIN_STREAM: u64 = u64::MAX;
/// Convergence threshold for the implicit leapfrog fixed-point sweeps.
const FIXED_POINT_TOL: f64 = 1e-12;
const SCALE_CLAMP: (f64, f64) = (1e-9, 1e3);

/// How much geometry a kernel needs from the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryOrder {
    /// Log-density only.
    Density,
    /// Log-density, gradient and metric.
    Gradient,
    /// Everything, including metric derivatives.
    Full,
}

/// A log-density with optional Riemannian geometry, evaluated pointwise.
pub trait Target: Sync {
    fn dim(&self) -> usize;

    fn param_names(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("p{i}")).collect()
    }

    fn evaluate(&self, theta_check: &DVector<f64>, order: GeometryOrder) -> Result<PosteriorBundle>;

    /// Draws a fresh chain initialisation (posterior targets draw from
    /// their prior); `None` when the target has no natural init law.
    fn draw_init(&self, _rng: &mut SimRng) -> Option<DVector<f64>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Mh,
    Smmala,
    Mmala,
    Rmhmc,
}

impl SamplerKind {
    pub fn geometry_order(&self) -> GeometryOrder {
        match self {
            SamplerKind::Mh => GeometryOrder::Density,
            SamplerKind::Smmala => GeometryOrder::Gradient,
            SamplerKind::Mmala | SamplerKind::Rmhmc => GeometryOrder::Full,
        }
    }

    /// Acceptance band the burn-in adaptation steers towards.
    pub fn default_target_acceptance(&self) -> (f64, f64) {
        match self {
            SamplerKind::Mh => (0.25, 0.30),
            _ => (0.70, 0.80),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerKind::Mh => "mh",
            SamplerKind::Smmala => "smmala",
            SamplerKind::Mmala => "mmala",
            SamplerKind::Rmhmc => "rmhmc",
        }
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mh" => Ok(SamplerKind::Mh),
            "smmala" => Ok(SamplerKind::Smmala),
            "mmala" => Ok(SamplerKind::Mmala),
            "rmhmc" => Ok(SamplerKind::Rmhmc),
            _ => Err(Error::Domain(format!("unknown sampler '{s}' (mh, smmala, mmala, rmhmc)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Integrator/proposal step size; also the initial per-parameter scale
    /// for MH when `scales` is not given.
    pub step_size: f64,
    /// Per-parameter random-walk scales (MH only).
    #[serde(default)]
    pub scales: Option<Vec<f64>>,
    /// Upper bound on the randomised leapfrog step count (RMHMC).
    pub leapfrog_steps: usize,
    pub fixed_point_iters: usize,
    pub n_burnin: usize,
    pub n_samples: usize,
    pub adapt_interval: usize,
    pub target_acceptance: (f64, f64),
}

impl SamplerConfig {
    pub fn new(kind: SamplerKind) -> Self {
        Self {
            kind,
            step_size: 1e-6,
            scales: None,
            leapfrog_steps: 5,
            fixed_point_iters: 6,
            n_burnin: 10_000,
            n_samples: 10_000,
            adapt_interval: 100,
            target_acceptance: kind.default_target_acceptance(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.step_size > 0.0) {
            return Err(Error::Domain("step size must be positive".into()));
        }
        if self.leapfrog_steps == 0 {
            return Err(Error::Domain("leapfrog step bound must be at least 1".into()));
        }
        if self.fixed_point_iters == 0 {
            return Err(Error::Domain("need at least one fixed-point sweep".into()));
        }
        if self.adapt_interval == 0 {
            return Err(Error::Domain("adapt interval must be positive".into()));
        }
        if let Some(scales) = &self.scales {
            if scales.len() != dim || scales.iter().any(|s| !(*s > 0.0)) {
                return Err(Error::Domain("per-parameter scales invalid".into()));
            }
        }
        let (lo, hi) = self.target_acceptance;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::Domain("target acceptance band invalid".into()));
        }
        Ok(())
    }
}

/// Current position of a chain with its cached geometry.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub theta_check: DVector<f64>,
    pub bundle: PosteriorBundle,
    pub iteration: usize,
}

impl ChainState {
    pub fn new(bundle: PosteriorBundle) -> Self {
        Self { theta_check: bundle.theta_check.clone(), bundle, iteration: 0 }
    }

    fn move_to(&mut self, bundle: PosteriorBundle) {
        self.theta_check = bundle.theta_check.clone();
        self.bundle = bundle;
    }
}

/// Samples, acceptance statistics and timing of one finished chain.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// Kept draws in `log10` space, one row per iteration.
    pub samples: DMatrix<f64>,
    /// Acceptance rate over the kept phase (per-proposal for MH sweeps).
    pub acceptance_rate: f64,
    /// Wall time of the kept phase, seconds.
    pub wall_time: f64,
    /// Wall time of burn-in, seconds.
    pub burnin_wall_time: f64,
    /// Configuration after burn-in adaptation.
    pub final_config: SamplerConfig,
    pub seed: u64,
}

fn randn<R: Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}

fn cholesky(metric: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    Cholesky::new(metric.clone())
}

fn accept_log_ratio<R: Rng>(log_r: f64, rng: &mut R) -> bool {
    log_r >= 0.0 || rng.random::<f64>().ln() < log_r
}

/// One Metropolis-within-Gibbs sweep: each coordinate gets an independent
/// Gaussian random-walk proposal, accepted on the density ratio alone.
/// Returns the per-parameter accept flags.
pub fn mh_within_gibbs_step<R: Rng>(
    state: &mut ChainState,
    scales: &[f64],
    target: &dyn Target,
    rng: &mut R,
) -> Vec<bool> {
    let n = state.theta_check.len();
    let mut flags = vec![false; n];
    for p in 0..n {
        let step: f64 = StandardNormal.sample(rng);
        let mut proposal = state.theta_check.clone();
        proposal[p] += scales[p] * step;
        if let Ok(bundle) = target.evaluate(&proposal, GeometryOrder::Density) {
            let log_r = bundle.log_post - state.bundle.log_post;
            if accept_log_ratio(log_r, rng) {
                state.move_to(bundle);
                flags[p] = true;
            }
        }
    }
    flags
}

/// Log-density of `N(x | mean, eps^2 G^{-1})` given the Cholesky factor
/// of `G`.
fn langevin_proposal_logpdf(
    x: &DVector<f64>,
    mean: &DVector<f64>,
    metric: &DMatrix<f64>,
    chol: &Cholesky<f64, Dyn>,
    eps: f64,
) -> f64 {
    let n = x.len() as f64;
    let log_det_g = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let diff = x - mean;
    let quad = (metric * &diff).dot(&diff);
    -0.5 * n * LN_2PI - n * eps.ln() + 0.5 * log_det_g - quad / (2.0 * eps * eps)
}

/// Proposal mean of the manifold Langevin kernels. With curvature, the
/// drift gains `-eps^2 * sum_ij Ginv_ij Gamma^d_ij` built from the
/// Christoffel symbols of the metric.
fn langevin_mean(
    bundle: &PosteriorBundle,
    chol: &Cholesky<f64, Dyn>,
    eps: f64,
    with_curvature: bool,
) -> Option<DVector<f64>> {
    let grad = bundle.grad.as_ref()?;
    let nat_grad = chol.solve(grad);
    let mut mean = &bundle.theta_check + nat_grad.scale(eps * eps / 2.0);
    if with_curvature {
        let derivs = bundle.metric_derivs.as_ref()?;
        let n = grad.len();
        let ginv = chol.inverse();
        // sum_ij Ginv_ij Gamma^d_ij
        //   = 1/2 sum_k Ginv_dk [ 2 sum_ij Ginv_ij d_i G_kj - sum_ij Ginv_ij d_k G_ij ]
        let mut inner = vec![0.0; n];
        for k in 0..n {
            let mut first = 0.0;
            let mut second = 0.0;
            for i in 0..n {
                for j in 0..n {
                    first += ginv[(i, j)] * derivs[i][(k, j)];
                    second += ginv[(i, j)] * derivs[k][(i, j)];
                }
            }
            inner[k] = 2.0 * first - second;
        }
        for d in 0..n {
            let mut corr = 0.0;
            for k in 0..n {
                corr += ginv[(d, k)] * inner[k];
            }
            mean[d] -= eps * eps * 0.5 * corr;
        }
    }
    Some(mean)
}

fn manifold_langevin_step<R: Rng>(
    state: &mut ChainState,
    eps: f64,
    target: &dyn Target,
    rng: &mut R,
    with_curvature: bool,
) -> bool {
    let order = if with_curvature { GeometryOrder::Full } else { GeometryOrder::Gradient };
    let Some(metric) = state.bundle.metric.clone() else { return false };
    let Some(chol) = cholesky(&metric) else { return false };
    let Some(mean) = langevin_mean(&state.bundle, &chol, eps, with_curvature) else {
        return false;
    };

    // draw from N(mean, eps^2 G^{-1}) through the upper Cholesky factor
    let z = randn(state.theta_check.len(), rng);
    let Some(step) = chol.l().transpose().solve_upper_triangular(&z) else { return false };
    let proposal = &mean + step.scale(eps);
    let log_q_fwd = langevin_proposal_logpdf(&proposal, &mean, &metric, &chol, eps);

    let Ok(bundle) = target.evaluate(&proposal, order) else { return false };
    let Some(metric_p) = bundle.metric.clone() else { return false };
    let Some(chol_p) = cholesky(&metric_p) else { return false };
    let Some(mean_rev) = langevin_mean(&bundle, &chol_p, eps, with_curvature) else {
        return false;
    };
    let log_q_rev =
        langevin_proposal_logpdf(&state.theta_check, &mean_rev, &metric_p, &chol_p, eps);

    let log_r = bundle.log_post - state.bundle.log_post + log_q_rev - log_q_fwd;
    if accept_log_ratio(log_r, rng) {
        state.move_to(bundle);
        true
    } else {
        false
    }
}

/// Simplified manifold MALA: Gaussian proposal centred at the natural-
/// gradient drift with covariance `eps^2 G^{-1}`, curvature terms dropped.
pub fn smmala_step<R: Rng>(
    state: &mut ChainState,
    eps: f64,
    target: &dyn Target,
    rng: &mut R,
) -> bool {
    manifold_langevin_step(state, eps, target, rng, false)
}

/// Full manifold MALA: as SMMALA plus the Christoffel correction to the
/// proposal mean; the covariance is unchanged.
pub fn mmala_step<R: Rng>(
    state: &mut ChainState,
    eps: f64,
    target: &dyn Target,
    rng: &mut R,
) -> bool {
    manifold_langevin_step(state, eps, target, rng, true)
}

struct FullGeometry {
    bundle: PosteriorBundle,
    chol: Cholesky<f64, Dyn>,
    /// `tr(G^{-1} d_i G)` per parameter.
    traces: Vec<f64>,
}

impl FullGeometry {
    fn new(bundle: PosteriorBundle) -> Result<Self> {
        let metric = bundle
            .metric
            .as_ref()
            .ok_or_else(|| Error::Eval("kernel requires metric geometry".into()))?;
        if bundle.grad.is_none() || bundle.metric_derivs.is_none() {
            return Err(Error::Eval("kernel requires full geometry".into()));
        }
        let chol = cholesky(metric)
            .ok_or_else(|| Error::NotPositiveDefinite("metric failed Cholesky".into()))?;
        let ginv = chol.inverse();
        let derivs = bundle.metric_derivs.as_ref().unwrap();
        let n = bundle.theta_check.len();
        let traces = (0..n)
            .map(|i| {
                let mut tr = 0.0;
                for r in 0..n {
                    for c in 0..n {
                        tr += ginv[(r, c)] * derivs[i][(c, r)];
                    }
                }
                tr
            })
            .collect();
        Ok(Self { bundle, chol, traces })
    }

    fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    /// `dH/dtheta` at this position for momentum `p`:
    /// `-dL/dtheta_i + tr(G^{-1} d_i G)/2 - (G^{-1}p)^T d_i G (G^{-1}p)/2`.
    fn grad_theta_hamiltonian(&self, momentum: &DVector<f64>) -> DVector<f64> {
        let grad = self.bundle.grad.as_ref().unwrap();
        let derivs = self.bundle.metric_derivs.as_ref().unwrap();
        let w = self.chol.solve(momentum);
        let n = momentum.len();
        DVector::from_iterator(
            n,
            (0..n).map(|i| {
                let quad = (&derivs[i] * &w).dot(&w);
                -grad[i] + 0.5 * self.traces[i] - 0.5 * quad
            }),
        )
    }

    fn hamiltonian(&self, momentum: &DVector<f64>) -> f64 {
        let n = momentum.len() as f64;
        let kinetic = 0.5 * self.chol.solve(momentum).dot(momentum);
        -self.bundle.log_post + 0.5 * (n * LN_2PI + self.log_det()) + kinetic
    }
}

fn metric_cholesky_at(
    target: &dyn Target,
    theta: &DVector<f64>,
) -> Result<Cholesky<f64, Dyn>> {
    let bundle = target.evaluate(theta, GeometryOrder::Gradient)?;
    let metric = bundle
        .metric
        .ok_or_else(|| Error::Eval("target returned no metric".into()))?;
    cholesky(&metric).ok_or_else(|| Error::NotPositiveDefinite("metric failed Cholesky".into()))
}

fn leapfrog_impl(
    geometry: FullGeometry,
    momentum: &DVector<f64>,
    eps: f64,
    n_steps: usize,
    target: &dyn Target,
    fixed_point_iters: usize,
) -> Result<(FullGeometry, DVector<f64>)> {
    let mut geo = geometry;
    let mut p = momentum.clone();
    for _ in 0..n_steps {
        // implicit momentum half-step: p_half solves
        // p_half = p - eps/2 * dH/dtheta(theta, p_half)
        let mut p_half = p.clone();
        for _ in 0..fixed_point_iters {
            let next = &p - geo.grad_theta_hamiltonian(&p_half).scale(eps / 2.0);
            let delta = (&next - &p_half).amax();
            p_half = next;
            if delta < FIXED_POINT_TOL {
                break;
            }
        }

        // implicit position step: theta' = theta + eps/2 * (G(theta)^{-1} +
        // G(theta')^{-1}) p_half. The first sweep uses the current metric
        // on both sides and costs no extra target evaluation.
        let v_fixed = geo.chol.solve(&p_half);
        let theta = geo.bundle.theta_check.clone();
        let mut theta_new = &theta + v_fixed.scale(eps);
        for _ in 1..fixed_point_iters {
            let chol_trial = metric_cholesky_at(target, &theta_new)?;
            let v_trial = chol_trial.solve(&p_half);
            let next = &theta + (&v_fixed + v_trial).scale(eps / 2.0);
            let delta = (&next - &theta_new).amax();
            theta_new = next;
            if delta < FIXED_POINT_TOL {
                break;
            }
        }

        // explicit momentum half-step with full geometry at the endpoint
        let bundle_new = target.evaluate(&theta_new, GeometryOrder::Full)?;
        geo = FullGeometry::new(bundle_new)?;
        p = &p_half - geo.grad_theta_hamiltonian(&p_half).scale(eps / 2.0);
    }
    Ok((geo, p))
}

/// Generalised leapfrog integration of the Riemannian Hamiltonian flow:
/// `n_steps` steps of size `eps` from `(theta_check, momentum)`, implicit
/// equations solved by fixed-point sweeps. `n_steps == 0` is the identity.
pub fn generalized_leapfrog(
    theta_check: &DVector<f64>,
    momentum: &DVector<f64>,
    eps: f64,
    n_steps: usize,
    target: &dyn Target,
    fixed_point_iters: usize,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let bundle = target.evaluate(theta_check, GeometryOrder::Full)?;
    let geo = FullGeometry::new(bundle)?;
    let (geo, p) = leapfrog_impl(geo, momentum, eps, n_steps, target, fixed_point_iters)?;
    Ok((geo.bundle.theta_check.clone(), p))
}

/// One RMHMC transition: momentum drawn from `N(0, G)`, a uniformly
/// randomised number of leapfrog steps up to `leapfrog_max`, and a
/// Metropolis correction on the Hamiltonian error.
pub fn rmhmc_step<R: Rng>(
    state: &mut ChainState,
    eps: f64,
    leapfrog_max: usize,
    fixed_point_iters: usize,
    target: &dyn Target,
    rng: &mut R,
) -> bool {
    let Ok(geo) = FullGeometry::new(state.bundle.clone()) else { return false };
    let z = randn(state.theta_check.len(), rng);
    let p0 = geo.chol.l() * z;
    let h0 = geo.hamiltonian(&p0);
    let u: f64 = 1.0 - rng.random::<f64>(); // uniform on (0, 1]
    let n_steps = ((u * leapfrog_max as f64).ceil() as usize).max(1);
    match leapfrog_impl(geo, &p0, eps, n_steps, target, fixed_point_iters) {
        Ok((geo_new, p_new)) => {
            let h_new = geo_new.hamiltonian(&p_new);
            if accept_log_ratio(h0 - h_new, rng) {
                state.move_to(geo_new.bundle);
                true
            } else {
                false
            }
        }
        Err(_) => false,
    }
}

/// Burn-in adaptation: every scale is multiplied by
/// `exp(observed - target_mid)` and clamped; `rates` carries one
/// acceptance rate per parameter for MH, a single rate otherwise.
pub fn adapt(config: &SamplerConfig, rates: &[f64]) -> SamplerConfig {
    let mid = 0.5 * (config.target_acceptance.0 + config.target_acceptance.1);
    let mut next = config.clone();
    match config.kind {
        SamplerKind::Mh => {
            let scales = next
                .scales
                .clone()
                .unwrap_or_else(|| vec![config.step_size; rates.len()]);
            next.scales = Some(
                scales
                    .iter()
                    .zip(rates)
                    .map(|(s, r)| (s * (r - mid).exp()).clamp(SCALE_CLAMP.0, SCALE_CLAMP.1))
                    .collect(),
            );
        }
        _ => {
            let r = rates.first().copied().unwrap_or(mid);
            next.step_size = (config.step_size * (r - mid).exp()).clamp(SCALE_CLAMP.0, SCALE_CLAMP.1);
        }
    }
    next
}

/// Runs one chain: burn-in with periodic adaptation, then `n_samples`
/// kept iterations with a frozen kernel. The chain owns a ChaCha stream
/// derived from `seed`, so equal seeds give bit-identical output.
///
/// When `init` is `None` (or fails to evaluate) fresh starting points are
/// drawn from the target's init law, up to 100 attempts.
pub fn run_chain(
    target: &dyn Target,
    config: &SamplerConfig,
    init: Option<DVector<f64>>,
    seed: u64,
) -> Result<ChainOutput> {
    let n = target.dim();
    config.validate(n)?;
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(CHAIN_STREAM);
    let order = config.kind.geometry_order();

    // initialise, re-drawing on evaluation failures
    let mut state = None;
    let mut pending = init;
    for _ in 0..100 {
        let theta = match pending.take() {
            Some(t) => t,
            None => target
                .draw_init(&mut rng)
                .ok_or_else(|| Error::Chain("no initial point and target has no init law".into()))?,
        };
        if theta.len() != n {
            return Err(Error::Chain("initial point has wrong dimension".into()));
        }
        if let Ok(bundle) = target.evaluate(&theta, order) {
            let usable = bundle.log_post.is_finite()
                && match order {
                    GeometryOrder::Density => true,
                    _ => bundle.metric.as_ref().and_then(cholesky).is_some(),
                };
            if usable {
                state = Some(ChainState::new(bundle));
                break;
            }
        }
    }
    let mut state = state.ok_or_else(|| {
        Error::Chain("failed to find a usable initial point in 100 draws".into())
    })?;

    // Expected-information proposals stall far out in the tails, where the
    // metric badly underestimates the observed curvature. A short
    // componentwise random-walk descent (part of burn-in, deterministic
    // under the seed) moves manifold kernels into the typical set first.
    if config.kind != SamplerKind::Mh {
        state = warm_start_descent(state, target, order, &mut rng);
    }

    let mut cfg = config.clone();
    if cfg.kind == SamplerKind::Mh && cfg.scales.is_none() {
        cfg.scales = Some(vec![cfg.step_size; n]);
    }

    let burnin_start = std::time::Instant::now();
    let mut window_accepts = vec![0.0_f64; if cfg.kind == SamplerKind::Mh { n } else { 1 }];
    let mut window_total = 0usize;
    for it in 0..cfg.n_burnin {
        state.iteration = it;
        step_once(&mut state, &cfg, target, &mut rng, Some(&mut window_accepts));
        window_total += 1;
        if (it + 1) % cfg.adapt_interval == 0 {
            let rates: Vec<f64> =
                window_accepts.iter().map(|a| a / window_total as f64).collect();
            cfg = adapt(&cfg, &rates);
            window_accepts.iter_mut().for_each(|a| *a = 0.0);
            window_total = 0;
        }
    }
    let burnin_wall_time = burnin_start.elapsed().as_secs_f64();

    let sampling_start = std::time::Instant::now();
    let mut samples = DMatrix::zeros(cfg.n_samples, n);
    let mut accepted = 0.0;
    let mut proposals = 0.0;
    for it in 0..cfg.n_samples {
        state.iteration = cfg.n_burnin + it;
        let (acc, prop) = step_once(&mut state, &cfg, target, &mut rng, None);
        accepted += acc;
        proposals += prop;
        for p in 0..n {
            samples[(it, p)] = state.theta_check[p];
        }
    }
    let wall_time = sampling_start.elapsed().as_secs_f64();

    Ok(ChainOutput {
        samples,
        acceptance_rate: if proposals > 0.0 { accepted / proposals } else { 0.0 },
        wall_time,
        burnin_wall_time,
        final_config: cfg,
        seed,
    })
}

/// Random-walk descent used to initialise the manifold kernels: sweeps
/// with a fixed moderate scale until the log-posterior stops improving,
/// then re-evaluates the full geometry at the reached point. Falls back
/// to the original state if that geometry is unusable.
fn warm_start_descent(
    state: ChainState,
    target: &dyn Target,
    order: GeometryOrder,
    rng: &mut SimRng,
) -> ChainState {
    const MAX_SWEEPS: usize = 400;
    const PLATEAU_SWEEPS: usize = 30;
    const SCALE: f64 = 0.25;

    let n = state.theta_check.len();
    let Ok(density) = target.evaluate(&state.theta_check, GeometryOrder::Density) else {
        return state;
    };
    let mut walker = ChainState::new(density);
    let scales = vec![SCALE; n];
    let mut best = walker.bundle.log_post;
    let mut since_improvement = 0;
    for _ in 0..MAX_SWEEPS {
        mh_within_gibbs_step(&mut walker, &scales, target, rng);
        if walker.bundle.log_post > best + 1.0 {
            best = walker.bundle.log_post;
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= PLATEAU_SWEEPS {
                break;
            }
        }
    }
    match target.evaluate(&walker.theta_check, order) {
        Ok(bundle)
            if bundle.log_post.is_finite()
                && bundle.metric.as_ref().and_then(cholesky).is_some() =>
        {
            ChainState::new(bundle)
        }
        _ => state,
    }
}

/// Advances the chain by one iteration, returning (accepted, proposed)
/// counts and optionally accumulating per-parameter window statistics.
fn step_once(
    state: &mut ChainState,
    cfg: &SamplerConfig,
    target: &dyn Target,
    rng: &mut SimRng,
    window: Option<&mut Vec<f64>>,
) -> (f64, f64) {
    match cfg.kind {
        SamplerKind::Mh => {
            let scales = cfg.scales.as_ref().expect("scales initialised in run_chain");
            let flags = mh_within_gibbs_step(state, scales, target, rng);
            let acc = flags.iter().filter(|f| **f).count() as f64;
            if let Some(w) = window {
                for (wp, f) in w.iter_mut().zip(&flags) {
                    *wp += f64::from(*f);
                }
            }
            (acc, flags.len() as f64)
        }
        kind => {
            let accepted = match kind {
                SamplerKind::Smmala => smmala_step(state, cfg.step_size, target, rng),
                SamplerKind::Mmala => mmala_step(state, cfg.step_size, target, rng),
                SamplerKind::Rmhmc => rmhmc_step(
                    state,
                    cfg.step_size,
                    cfg.leapfrog_steps,
                    cfg.fixed_point_iters,
                    target,
                    rng,
                ),
                SamplerKind::Mh => unreachable!(),
            };
            if let Some(w) = window {
                w[0] += f64::from(accepted);
            }
            (f64::from(accepted), 1.0)
        }
    }
}
