//! Stochastic simulators and the replicate data-generation protocol.
//!
//! * [`ssa_simulate`] — exact Gillespie simulation (direct method with a
//!   linear scan; the benchmark networks have at most four reactions).
//! * [`euler_maruyama_simulate`] — the chemical-Langevin diffusion on a
//!   fixed time grid.
//! * [`complete_data_loglik`] — log-likelihood of a fully observed jump
//!   trajectory.
//! * [`generate_dataset`] — independent-replicate observations: each data
//!   point comes from a fresh trajectory run from `t0` and sacrificed at
//!   its observation time.
//!
//! Every stochastic operation takes an explicit ChaCha RNG. Dataset
//! generation derives one child stream per (time, replicate) cell from the
//! caller's RNG, so results are bit-reproducible for a given seed and
//! independent of evaluation order.

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::model::MjpModel;

/// Counter-based RNG used throughout; distinct `set_stream` values give
/// independent, individually seekable random streams.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// A completely observed jump trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t_start: f64,
    pub t_end: f64,
    /// Strictly increasing event times within `(t_start, t_end]`.
    pub event_times: Vec<f64>,
    /// Reaction index (0-based) of each event.
    pub event_types: Vec<usize>,
    /// State after each event, preceded by the initial state; length is
    /// `event_times.len() + 1`.
    pub states: Vec<Vec<i64>>,
}

impl Trajectory {
    pub fn n_events(&self) -> usize {
        self.event_times.len()
    }

    pub fn initial_state(&self) -> &[i64] {
        &self.states[0]
    }

    pub fn final_state(&self) -> &[i64] {
        self.states.last().expect("trajectory always holds the initial state")
    }

    /// Checks the structural invariants against a model's stoichiometry.
    pub fn validate(&self, model: &MjpModel) -> Result<()> {
        let d = model.n_species();
        if self.states.len() != self.event_times.len() + 1 {
            return Err(Error::Domain("trajectory state count mismatch".into()));
        }
        let mut prev_t = self.t_start;
        for (i, &t) in self.event_times.iter().enumerate() {
            if t <= prev_t || t > self.t_end {
                return Err(Error::Domain(format!("event time {t} outside ({prev_t}, {}]", self.t_end)));
            }
            prev_t = t;
            let j = self.event_types[i];
            if j >= model.n_reactions() {
                return Err(Error::Domain(format!("unknown reaction index {j}")));
            }
            for k in 0..d {
                if self.states[i + 1][k] != self.states[i][k] + model.stoich(k, j) {
                    return Err(Error::Domain(format!("state change at event {i} inconsistent")));
                }
            }
        }
        if self.states.iter().flatten().any(|v| *v < 0) {
            return Err(Error::Domain("negative state in trajectory".into()));
        }
        Ok(())
    }
}

/// Core SSA loop; invokes `on_event(t, j, x)` after applying each jump.
///
/// Waiting times are exponential with the total propensity at the
/// current state and time; for time-dependent rates this freezes the
/// rates between events, matching the complete-data likelihood below.
fn ssa_run<R: Rng, F: FnMut(f64, usize, &[i64])>(
    model: &MjpModel,
    x: &mut [i64],
    theta: &[f64],
    t0: f64,
    t_end: f64,
    rng: &mut R,
    mut on_event: F,
) -> Result<()> {
    let m = model.n_reactions();
    let d = model.n_species();
    let mut rates = vec![0.0; m];
    let mut t = t0;
    loop {
        rates.iter_mut().for_each(|v| *v = 0.0);
        model.eval_propensities_into(x, theta, t, &mut rates);
        let mut total = 0.0;
        for &r in &rates {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::Domain(format!("propensity evaluated to {r}")));
            }
            total += r;
        }
        if total <= 0.0 {
            return Ok(()); // absorbing state: freeze until t_end
        }
        let tau: f64 = Exp::new(total).expect("positive rate").sample(rng);
        t += tau;
        if t > t_end {
            return Ok(());
        }
        let mut u = rng.random::<f64>() * total;
        let mut chosen = m - 1;
        for (j, &r) in rates.iter().enumerate() {
            u -= r;
            if u <= 0.0 && r > 0.0 {
                chosen = j;
                break;
            }
        }
        for k in 0..d {
            x[k] += model.stoich(k, chosen);
            if x[k] < 0 {
                return Err(Error::Domain(format!(
                    "reaction {chosen} drove species {k} negative"
                )));
            }
        }
        on_event(t, chosen, x);
    }
}

/// Exact realisation of the jump process on `[t0, t_end]`.
pub fn ssa_simulate<R: Rng>(
    model: &MjpModel,
    x0: &[i64],
    theta: &[f64],
    t0: f64,
    t_end: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    model.propensities(x0, theta, t0)?; // validates state and parameters
    if !(t0 < t_end) {
        return Err(Error::Domain("t0 must precede t_end".into()));
    }
    let mut x = x0.to_vec();
    let mut traj = Trajectory {
        t_start: t0,
        t_end,
        event_times: Vec::new(),
        event_types: Vec::new(),
        states: vec![x0.to_vec()],
    };
    ssa_run(model, &mut x, theta, t0, t_end, rng, |t, j, state| {
        traj.event_times.push(t);
        traj.event_types.push(j);
        traj.states.push(state.to_vec());
    })?;
    Ok(traj)
}

/// Runs the SSA and returns only the terminal state.
pub fn ssa_final_state<R: Rng>(
    model: &MjpModel,
    x0: &[i64],
    theta: &[f64],
    t0: f64,
    t_end: f64,
    rng: &mut R,
) -> Result<Vec<i64>> {
    model.propensities(x0, theta, t0)?;
    if !(t0 < t_end) {
        return Err(Error::Domain("t0 must precede t_end".into()));
    }
    let mut x = x0.to_vec();
    ssa_run(model, &mut x, theta, t0, t_end, rng, |_, _, _| {})?;
    Ok(x)
}

/// Log-likelihood of a completely observed trajectory: the sum of log
/// propensities of the realised events minus the survival integral, with
/// rates held at their value at the start of each holding interval. The
/// censored interval after the last event contributes its survival term.
///
/// An observed event whose propensity vanishes yields `-inf` rather than
/// an error.
pub fn complete_data_loglik(model: &MjpModel, trajectory: &Trajectory, theta: &[f64]) -> Result<f64> {
    trajectory.validate(model)?;
    model.propensities(trajectory.initial_state(), theta, trajectory.t_start)?;
    let m = model.n_reactions();
    let mut rates = vec![0.0; m];
    let mut ll = 0.0;
    let mut prev_t = trajectory.t_start;
    for i in 0..trajectory.n_events() {
        let x = &trajectory.states[i];
        rates.iter_mut().for_each(|v| *v = 0.0);
        model.eval_propensities_into(x, theta, prev_t, &mut rates);
        let total: f64 = rates.iter().sum();
        let t = trajectory.event_times[i];
        let f_event = rates[trajectory.event_types[i]];
        if f_event <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        ll += f_event.ln() - (t - prev_t) * total;
        prev_t = t;
    }
    let x_last = trajectory.final_state();
    rates.iter_mut().for_each(|v| *v = 0.0);
    model.eval_propensities_into(x_last, theta, prev_t, &mut rates);
    let total: f64 = rates.iter().sum();
    ll -= (trajectory.t_end - prev_t) * total;
    Ok(ll)
}

/// A diffusion path sampled on a fixed grid.
#[derive(Debug, Clone)]
pub struct EmPath {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

/// One Euler–Maruyama step of the chemical Langevin equation with the
/// given standard-normal draws (one per reaction channel). Rates are the
/// macroscopic law scaled back to molecule units, evaluated at the state
/// clamped at zero.
fn em_step(
    model: &MjpModel,
    x: &mut [f64],
    theta: &[f64],
    t: f64,
    dt: f64,
    eta: &[f64],
    z: &mut [f64],
    rates: &mut [f64],
) {
    let omega = model.omega();
    let (d, m) = (model.n_species(), model.n_reactions());
    for k in 0..d {
        z[k] = x[k].max(0.0) / omega;
    }
    rates.iter_mut().for_each(|v| *v = 0.0);
    model.eval_macro_rates_into(z, theta, t, rates);
    for j in 0..m {
        let rate = (omega * rates[j]).max(0.0);
        let jump = rate * dt + (rate * dt).sqrt() * eta[j];
        for k in 0..d {
            let s = model.stoich(k, j);
            if s != 0 {
                x[k] += s as f64 * jump;
            }
        }
    }
}

/// Simulates the chemical Langevin equation from `x0` (molecule units) on
/// a `dt` grid; the final step is truncated to land on `t_end`.
pub fn euler_maruyama_simulate<R: Rng>(
    model: &MjpModel,
    x0: &[f64],
    theta: &[f64],
    t0: f64,
    t_end: f64,
    dt: f64,
    rng: &mut R,
) -> Result<EmPath> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    if !(t0 < t_end) {
        return Err(Error::Domain("t0 must precede t_end".into()));
    }
    if x0.len() != model.n_species() {
        return Err(Error::Domain("initial state has wrong dimension".into()));
    }
    {
        let z: Vec<f64> = x0.iter().map(|v| v.max(0.0) / model.omega()).collect();
        model.macro_rates(&z, theta, t0)?; // validates parameters
    }
    let (d, m) = (model.n_species(), model.n_reactions());
    let mut x = x0.to_vec();
    let mut t = t0;
    let mut path = EmPath { times: vec![t0], states: vec![x0.to_vec()] };
    let mut z = vec![0.0; d];
    let mut rates = vec![0.0; m];
    let mut eta = vec![0.0; m];
    while t < t_end - 1e-12 * t_end.abs().max(1.0) {
        let step = dt.min(t_end - t);
        for e in eta.iter_mut() {
            *e = StandardNormal.sample(rng);
        }
        em_step(model, &mut x, theta, t, step, &eta, &mut z, &mut rates);
        t += step;
        path.times.push(t);
        path.states.push(x.clone());
    }
    Ok(path)
}

/// Discretely observed, independently replicated observations.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// Strictly increasing observation times.
    pub times: Vec<f64>,
    pub n_replicates: usize,
    /// Counts indexed `[time][replicate][species]`.
    pub observations: Vec<Vec<Vec<i64>>>,
    pub omega: f64,
    pub model_name: String,
}

impl Dataset {
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn validate(&self, n_species: usize) -> Result<()> {
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("observation times must be strictly increasing".into()));
        }
        if self.observations.len() != self.times.len() {
            return Err(Error::Domain("observation tensor does not match time grid".into()));
        }
        for row in &self.observations {
            if row.len() != self.n_replicates {
                return Err(Error::Domain("replicate count mismatch".into()));
            }
            for obs in row {
                if obs.len() != n_species {
                    return Err(Error::Domain("species count mismatch".into()));
                }
                if obs.iter().any(|v| *v < 0) {
                    return Err(Error::Domain("negative observation".into()));
                }
            }
        }
        Ok(())
    }
}

fn sample_poisson<R: Rng>(mean: f64, rng: &mut R) -> i64 {
    if mean <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(mean).expect("positive mean").sample(rng);
    draw as i64
}

/// Generates the replicate ("sacrifice") dataset: for every observation
/// time and replicate, a fresh initial state is drawn from independent
/// Poissons with the given means and a fresh SSA trajectory is run from
/// `t = 0`, keeping only the terminal state.
///
/// Child RNG streams are derived per (time, replicate) cell, so the result
/// depends only on the caller's seeded RNG.
pub fn generate_dataset(
    model: &MjpModel,
    theta: &[f64],
    times: &[f64],
    n_replicates: usize,
    init_means: &[f64],
    rng: &SimRng,
) -> Result<Dataset> {
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("times must be strictly increasing and positive".into()));
    }
    if n_replicates == 0 {
        return Err(Error::Domain("need at least one replicate".into()));
    }
    if init_means.len() != model.n_species() || init_means.iter().any(|v| *v < 0.0) {
        return Err(Error::Domain("invalid initial means".into()));
    }
    let zero = vec![0_i64; model.n_species()];
    model.propensities(&zero, theta, 0.0)?; // validates parameters

    let mut observations = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let mut row = Vec::with_capacity(n_replicates);
        for r in 0..n_replicates {
            let mut cell_rng = rng.clone();
            cell_rng.set_stream((i * n_replicates + r + 1) as u64);
            let x0: Vec<i64> =
                init_means.iter().map(|m| sample_poisson(*m, &mut cell_rng)).collect();
            row.push(ssa_final_state(model, &x0, theta, 0.0, t, &mut cell_rng)?);
        }
        observations.push(row);
    }
    Ok(Dataset {
        times: times.to_vec(),
        n_replicates,
        observations,
        omega: model.omega(),
        model_name: model.name().to_string(),
    })
}

#[cfg(test)]
mod tests;
