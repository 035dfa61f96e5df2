//! Small hand-built models shared across unit tests. These act as
//! independent oracles: their moments and likelihoods have closed forms.

use crate::model::{MjpModel, MjpModelParts};

/// `dphi = -theta*phi`; one species, one reaction, one parameter.
pub(crate) fn pure_decay_model() -> MjpModel {
    MjpModel::new(MjpModelParts {
        name: "pure-decay".into(),
        n_species: 1,
        n_reactions: 1,
        n_params: 1,
        omega: 1.0,
        state_change: vec![-1],
        species_names: vec!["X".into()],
        param_names: vec!["c".into()],
        propensity: Box::new(|x, th, _t, out| out[0] = th[0] * x[0] as f64),
        macro_rate: Box::new(|z, th, _t, out| out[0] = th[0] * z[0]),
        jac_z: Box::new(|_z, th, _t, out| out[0] = th[0]),
        jac_theta: Box::new(|z, _th, _t, out| out[0] = z[0]),
        hessians: Some(Box::new(|_z, _th, _t, bufs| bufs.ztheta[0] = 1.0)),
        third_derivs: Some(Box::new(|_z, _th, _t, _bufs| {})),
    })
    .unwrap()
}

/// Immigration at rate `c_in * omega`, death at per-capita rate `c_out`;
/// the stationary law is Poisson with mean `omega * c_in / c_out`.
pub(crate) fn immigration_death_model(omega: f64) -> MjpModel {
    MjpModel::new(MjpModelParts {
        name: "immigration-death".into(),
        n_species: 1,
        n_reactions: 2,
        n_params: 2,
        omega,
        state_change: vec![1, -1],
        species_names: vec!["X".into()],
        param_names: vec!["c_in".into(), "c_out".into()],
        propensity: Box::new(move |x, th, _t, out| {
            out[0] = th[0] * omega;
            out[1] = th[1] * x[0] as f64;
        }),
        macro_rate: Box::new(|z, th, _t, out| {
            out[0] = th[0];
            out[1] = th[1] * z[0];
        }),
        jac_z: Box::new(|_z, th, _t, out| out[1] = th[1]),
        jac_theta: Box::new(|z, _th, _t, out| {
            out[0] = 1.0;
            out[3] = z[0];
        }),
        hessians: Some(Box::new(|_z, _th, _t, bufs| bufs.ztheta[3] = 1.0)),
        third_derivs: Some(Box::new(|_z, _th, _t, _bufs| {})),
    })
    .unwrap()
}

/// Pure immigration at constant rate `c * omega`; the event count on
/// `[0, t]` is Poisson with mean `c * omega * t`.
pub(crate) fn immigration_only_model(omega: f64) -> MjpModel {
    MjpModel::new(MjpModelParts {
        name: "immigration-only".into(),
        n_species: 1,
        n_reactions: 1,
        n_params: 1,
        omega,
        state_change: vec![1],
        species_names: vec!["X".into()],
        param_names: vec!["c".into()],
        propensity: Box::new(move |_x, th, _t, out| out[0] = th[0] * omega),
        macro_rate: Box::new(|_z, th, _t, out| out[0] = th[0]),
        jac_z: Box::new(|_z, _th, _t, _out| {}),
        jac_theta: Box::new(|_z, _th, _t, out| out[0] = 1.0),
        hessians: Some(Box::new(|_z, _th, _t, _bufs| {})),
        third_derivs: Some(Box::new(|_z, _th, _t, _bufs| {})),
    })
    .unwrap()
}

/// Two birth channels; the second fires at a rate proportional to the
/// population, so it has zero propensity at an empty state.
pub(crate) fn two_birth_model() -> MjpModel {
    MjpModel::new(MjpModelParts {
        name: "two-birth".into(),
        n_species: 1,
        n_reactions: 2,
        n_params: 2,
        omega: 1.0,
        state_change: vec![1, 1],
        species_names: vec!["X".into()],
        param_names: vec!["c1".into(), "c2".into()],
        propensity: Box::new(|x, th, _t, out| {
            out[0] = th[0];
            out[1] = th[1] * x[0] as f64;
        }),
        macro_rate: Box::new(|z, th, _t, out| {
            out[0] = th[0];
            out[1] = th[1] * z[0];
        }),
        jac_z: Box::new(|_z, th, _t, out| out[1] = th[1]),
        jac_theta: Box::new(|z, _th, _t, out| {
            out[0] = 1.0;
            out[3] = z[0];
        }),
        hessians: Some(Box::new(|_z, _th, _t, bufs| bufs.ztheta[3] = 1.0)),
        third_derivs: Some(Box::new(|_z, _th, _t, _bufs| {})),
    })
    .unwrap()
}
