use approx::assert_relative_eq;
use rand::SeedableRng;

use super::*;
use crate::model::build_model;
use crate::testutil::{
    immigration_death_model, immigration_only_model, pure_decay_model, two_birth_model,
};

fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

#[test]
fn absorbing_state_freezes_trajectory() {
    let model = pure_decay_model();
    let traj = ssa_simulate(&model, &[0], &[1.0], 0.0, 5.0, &mut rng(1)).unwrap();
    assert_eq!(traj.n_events(), 0);
    assert_eq!(traj.final_state(), &[0]);
}

#[test]
fn ssa_trajectory_satisfies_invariants() {
    let model = build_model("decay-dimerization", 5.0).unwrap();
    let theta = [1.0, 0.4, 0.5, 0.04];
    let traj = ssa_simulate(&model, &[25, 0, 0], &theta, 0.0, 10.0, &mut rng(2)).unwrap();
    assert!(traj.n_events() > 10);
    traj.validate(&model).unwrap();
    assert!(traj.event_times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn immigration_event_count_matches_poisson_law() {
    // events on [0, t] form a Poisson process with rate c * omega
    let model = immigration_only_model(1.0);
    let (c, t) = (2.0, 3.0);
    let n_runs = 3000;
    let mut total = 0.0;
    let mut total_sq = 0.0;
    for i in 0..n_runs {
        let mut r = rng(100 + i);
        let traj = ssa_simulate(&model, &[0], &[c], 0.0, t, &mut r).unwrap();
        let n = traj.n_events() as f64;
        total += n;
        total_sq += n * n;
    }
    let n = n_runs as f64;
    let mean = total / n;
    let var = (total_sq - n * mean * mean) / (n - 1.0);
    let se = (var / n).sqrt();
    let expected = c * t;
    assert!(
        (mean - expected).abs() <= 4.0 * se,
        "mean {mean} vs {expected} (se {se})"
    );
}

#[test]
fn pure_death_mean_matches_exponential_decay() {
    let model = pure_decay_model();
    let (c, t, x0) = (0.3, 2.0, 100_i64);
    let n_runs = 5000;
    let mut total = 0.0;
    let mut total_sq = 0.0;
    for i in 0..n_runs {
        let mut r = rng(300 + i);
        let x = ssa_final_state(&model, &[x0], &[c], 0.0, t, &mut r).unwrap();
        total += x[0] as f64;
        total_sq += (x[0] * x[0]) as f64;
    }
    let n = n_runs as f64;
    let mean = total / n;
    let var = (total_sq - n * mean * mean) / (n - 1.0);
    let se = (var / n).sqrt();
    let expected = x0 as f64 * (-c * t).exp();
    assert!(
        (mean - expected).abs() <= 4.0 * se,
        "mean {mean} vs {expected} (se {se})"
    );
}

#[test]
fn loglik_of_eventless_trajectory_is_survival_term() {
    let model = pure_decay_model();
    let traj = Trajectory {
        t_start: 0.0,
        t_end: 2.0,
        event_times: vec![],
        event_types: vec![],
        states: vec![vec![3]],
    };
    let ll = complete_data_loglik(&model, &traj, &[0.7]).unwrap();
    assert_relative_eq!(ll, -2.0 * 0.7 * 3.0, max_relative = 1e-14);
}

#[test]
fn loglik_of_single_event_matches_direct_formula() {
    let model = immigration_death_model(1.0);
    let theta = [1.5, 0.4];
    let traj = Trajectory {
        t_start: 0.0,
        t_end: 2.0,
        event_times: vec![0.7],
        event_types: vec![0],
        states: vec![vec![2], vec![3]],
    };
    let ll = complete_data_loglik(&model, &traj, &theta).unwrap();
    let lam0 = theta[0] + theta[1] * 2.0;
    let lam1 = theta[0] + theta[1] * 3.0;
    let expected = theta[0].ln() - 0.7 * lam0 - (2.0 - 0.7) * lam1;
    assert_relative_eq!(ll, expected, max_relative = 1e-14);
}

#[test]
fn death_rate_mle_maximises_complete_data_loglik() {
    let model = pure_decay_model();
    let c_true = 0.5;
    let traj = ssa_simulate(&model, &[200], &[c_true], 0.0, 30.0, &mut rng(42)).unwrap();
    // closed form: deaths / integrated population
    let mut occupancy = 0.0;
    let mut prev_t = traj.t_start;
    for i in 0..traj.n_events() {
        occupancy += traj.states[i][0] as f64 * (traj.event_times[i] - prev_t);
        prev_t = traj.event_times[i];
    }
    occupancy += traj.final_state()[0] as f64 * (traj.t_end - prev_t);
    let c_hat = traj.n_events() as f64 / occupancy;
    let ll = |c: f64| complete_data_loglik(&model, &traj, &[c]).unwrap();
    assert!(ll(c_hat) > ll(c_hat * 1.05));
    assert!(ll(c_hat) > ll(c_hat * 0.95));
    assert_relative_eq!(c_hat, c_true, max_relative = 0.3);
}

#[test]
fn loglik_is_neg_infinity_for_impossible_event() {
    let model = two_birth_model();
    let traj = Trajectory {
        t_start: 0.0,
        t_end: 1.0,
        event_times: vec![0.5],
        event_types: vec![1], // rate is proportional to the (empty) population
        states: vec![vec![0], vec![1]],
    };
    let ll = complete_data_loglik(&model, &traj, &[1.0, 1.0]).unwrap();
    assert_eq!(ll, f64::NEG_INFINITY);
}

#[test]
fn em_drift_step_is_euler_step_of_scaled_mean_equation() {
    let model = immigration_death_model(2.0);
    let theta = [3.0, 0.5];
    let mut x = vec![10.0];
    let eta = vec![0.0, 0.0];
    let mut z = vec![0.0];
    let mut rates = vec![0.0, 0.0];
    let dt = 0.01;
    em_step(&model, &mut x, &theta, 0.0, dt, &eta, &mut z, &mut rates);
    // omega * (phi + dt * (g_in - g_out * phi)) with phi = 5
    let expected = 2.0 * (5.0 + dt * (3.0 - 0.5 * 5.0));
    assert_relative_eq!(x[0], expected, max_relative = 1e-14);
}

#[test]
fn em_immigration_death_is_poisson_like_at_stationarity() {
    let model = immigration_death_model(1.0);
    let theta = [50.0, 1.0];
    let n_paths = 1000;
    let mut finals = Vec::with_capacity(n_paths);
    for i in 0..n_paths {
        let mut r = rng(700 + i as u64);
        let path = euler_maruyama_simulate(&model, &[50.0], &theta, 0.0, 5.0, 0.01, &mut r).unwrap();
        finals.push(path.states.last().unwrap()[0]);
    }
    let n = n_paths as f64;
    let mean = finals.iter().sum::<f64>() / n;
    let var = finals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    assert!((var - mean).abs() / mean < 0.10, "mean {mean}, var {var}");
}

#[test]
fn em_schlogl_ensemble_is_bimodal() {
    // bistable regime: deterministic fixed points near 85 and 563 with an
    // unstable point near 245, straddled by the initial state
    let model = build_model("schlogl", 1.0).unwrap();
    let theta = [0.03, 0.0001, 200.0, 3.5];
    let mut low = 0;
    let mut high = 0;
    for i in 0..200 {
        let mut r = rng(900 + i);
        let path =
            euler_maruyama_simulate(&model, &[280.0], &theta, 0.0, 10.0, 0.01, &mut r).unwrap();
        let x = path.states.last().unwrap()[0];
        if x < 150.0 {
            low += 1;
        }
        if x > 400.0 {
            high += 1;
        }
    }
    assert!(low >= 5 && high >= 5, "low {low}, high {high}");
}

#[test]
fn em_rejects_nonpositive_dt() {
    let model = pure_decay_model();
    assert!(euler_maruyama_simulate(&model, &[1.0], &[1.0], 0.0, 1.0, 0.0, &mut rng(0)).is_err());
}

#[test]
fn dataset_has_protocol_shape() {
    let model = build_model("decay-dimerization", 10.0).unwrap();
    let theta = [1.0, 0.2, 0.5, 0.04];
    let times: Vec<f64> = (1..=100).map(|i| 0.1 * i as f64).collect();
    let ds = generate_dataset(&model, &theta, &times, 10, &[50.0, 0.0, 0.0], &rng(5)).unwrap();
    assert_eq!(ds.n_times(), 100);
    assert_eq!(ds.observations.len(), 100);
    assert!(ds.observations.iter().all(|row| row.len() == 10));
    assert!(ds.observations.iter().flatten().all(|obs| obs.len() == 3));
    ds.validate(3).unwrap();
    assert_eq!(ds.model_name, "decay-dimerization");
}

#[test]
fn dataset_degenerate_shape() {
    let model = pure_decay_model();
    let ds = generate_dataset(&model, &[0.5], &[1.0], 1, &[20.0], &rng(6)).unwrap();
    assert_eq!(ds.n_times(), 1);
    assert_eq!(ds.n_replicates, 1);
    assert_eq!(ds.observations[0].len(), 1);
}

#[test]
fn dataset_generation_is_reproducible() {
    let model = build_model("schlogl", 1.0).unwrap();
    let theta = [0.003, 0.0001, 200.0, 3.5];
    let times = [0.5, 1.0, 1.5];
    let a = generate_dataset(&model, &theta, &times, 4, &[280.0], &rng(7)).unwrap();
    let b = generate_dataset(&model, &theta, &times, 4, &[280.0], &rng(7)).unwrap();
    assert_eq!(a.observations, b.observations);
}
