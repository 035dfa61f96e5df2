//! The benchmark reaction networks.
//!
//! * `decay-dimerization` — an unstable monomer dimerises to an unstable
//!   dimer which converts to a stable species; parameters `(c1, c2_hat,
//!   c3, c4)` with the dimerisation rate inferred up to the system-size
//!   proportionality (`c2_hat = c2 / omega`).
//! * `schlogl` — the bistable Schloegl reaction set on a single species,
//!   parameters `(c1, c2, c3, c4)`.
//! * `single-gene` — transcription/translation of one gene with a pulsed
//!   transcription rate `k_R(t) = b0*exp(-b1*(t - b2)^2) + b3`; parameters
//!   `(gamma_R, k_P, gamma_P, b0, b1, b2, b3)`.
//! * `single-gene-autoreg` — the same network with transcription inhibited
//!   by its own protein through a Hill function.

use crate::error::{Error, Result};

use super::hill::eval_hill_rate;
use super::{HessianBufs, MjpModel, MjpModelParts, ThirdDerivBufs};

pub const KNOWN_MODELS: [&str; 4] =
    ["decay-dimerization", "schlogl", "single-gene", "single-gene-autoreg"];

/// Builds one of the benchmark models by name.
pub fn build_model(name: &str, omega: f64) -> Result<MjpModel> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    match name {
        "decay-dimerization" => decay_dimerization(omega),
        "schlogl" => schlogl(omega),
        "single-gene" => single_gene(omega),
        "single-gene-autoreg" => single_gene_autoreg(omega),
        _ => Err(Error::UnknownModel { name: name.to_string(), known: KNOWN_MODELS.join(", ") }),
    }
}

fn decay_dimerization(omega: f64) -> Result<MjpModel> {
    let (d, m, p) = (3, 4, 4);
    MjpModel::new(MjpModelParts {
        name: "decay-dimerization".into(),
        n_species: d,
        n_reactions: m,
        n_params: p,
        omega,
        #[rustfmt::skip]
        state_change: vec![
            -1, -2,  2,  0,
             0,  1, -1, -1,
             0,  0,  0,  1,
        ],
        species_names: vec!["S1".into(), "S2".into(), "S3".into()],
        param_names: vec!["c1".into(), "c2_hat".into(), "c3".into(), "c4".into()],
        propensity: Box::new(move |x, th, _t, out| {
            let s1 = x[0] as f64;
            let s2 = x[1] as f64;
            out[0] = th[0] * s1;
            out[1] = th[1] * s1 * (s1 - 1.0) / 2.0;
            out[2] = th[2] * s2;
            out[3] = th[3] * s2;
        }),
        macro_rate: Box::new(move |z, th, _t, out| {
            out[0] = th[0] * z[0];
            out[1] = th[1] * omega * z[0] * z[0] / 2.0;
            out[2] = th[2] * z[1];
            out[3] = th[3] * z[1];
        }),
        jac_z: Box::new(move |z, th, _t, out| {
            // rows: reaction, cols: species
            out[0] = th[0];
            out[d] = th[1] * omega * z[0];
            out[2 * d + 1] = th[2];
            out[3 * d + 1] = th[3];
        }),
        jac_theta: Box::new(move |z, _th, _t, out| {
            out[0] = z[0];
            out[p + 1] = omega * z[0] * z[0] / 2.0;
            out[2 * p + 2] = z[1];
            out[3 * p + 3] = z[1];
        }),
        hessians: Some(Box::new(move |z, th, _t, bufs: &mut HessianBufs<'_>| {
            bufs.zz[(1 * d) * d] = th[1] * omega; // g2: (z1, z1)
            bufs.ztheta[0] = 1.0; // g1: (z1, c1)
            bufs.ztheta[(1 * d) * p + 1] = omega * z[0]; // g2: (z1, c2_hat)
            bufs.ztheta[(2 * d + 1) * p + 2] = 1.0; // g3: (z2, c3)
            bufs.ztheta[(3 * d + 1) * p + 3] = 1.0; // g4: (z2, c4)
        })),
        third_derivs: Some(Box::new(move |_z, _th, _t, bufs: &mut ThirdDerivBufs<'_>| {
            // only d3g2/dz1dz1dc2_hat is nonzero
            bufs.zztheta[((1 * d) * d) * p + 1] = omega;
        })),
    })
}

fn schlogl(omega: f64) -> Result<MjpModel> {
    let (d, m, p) = (1, 4, 4);
    MjpModel::new(MjpModelParts {
        name: "schlogl".into(),
        n_species: d,
        n_reactions: m,
        n_params: p,
        omega,
        state_change: vec![1, -1, 1, -1],
        species_names: vec!["S1".into()],
        param_names: vec!["c1".into(), "c2".into(), "c3".into(), "c4".into()],
        propensity: Box::new(move |x, th, _t, out| {
            let s = x[0] as f64;
            out[0] = th[0] / omega * s * (s - 1.0) / 2.0;
            out[1] = th[1] / (omega * omega) * s * (s - 1.0) * (s - 2.0) / 6.0;
            out[2] = th[2] * omega;
            out[3] = th[3] * s;
        }),
        macro_rate: Box::new(move |z, th, _t, out| {
            out[0] = th[0] * z[0] * z[0] / 2.0;
            out[1] = th[1] * z[0] * z[0] * z[0] / 6.0;
            out[2] = th[2];
            out[3] = th[3] * z[0];
        }),
        jac_z: Box::new(move |z, th, _t, out| {
            out[0] = th[0] * z[0];
            out[1] = th[1] * z[0] * z[0] / 2.0;
            out[3] = th[3];
        }),
        jac_theta: Box::new(move |z, _th, _t, out| {
            out[0] = z[0] * z[0] / 2.0;
            out[p + 1] = z[0] * z[0] * z[0] / 6.0;
            out[2 * p + 2] = 1.0;
            out[3 * p + 3] = z[0];
        }),
        hessians: Some(Box::new(move |z, th, _t, bufs: &mut HessianBufs<'_>| {
            bufs.zz[0] = th[0];
            bufs.zz[1] = th[1] * z[0];
            bufs.ztheta[0] = z[0]; // g1: (z, c1)
            bufs.ztheta[p + 1] = z[0] * z[0] / 2.0; // g2: (z, c2)
            bufs.ztheta[3 * p + 3] = 1.0; // g4: (z, c4)
        })),
        third_derivs: Some(Box::new(move |z, th, _t, bufs: &mut ThirdDerivBufs<'_>| {
            bufs.zzz[1] = th[1];
            bufs.zztheta[0] = 1.0; // g1: (z, z, c1)
            bufs.zztheta[p + 1] = z[0]; // g2: (z, z, c2)
        })),
    })
}

/// Pulsed transcription rate and its first and second parameter
/// derivatives. `b` holds `(b0, b1, b2, b3)`; the derivative arrays are
/// indexed the same way.
pub(super) fn transcription_rate(t: f64, b: [f64; 4]) -> (f64, [f64; 4], [[f64; 4]; 4]) {
    let [b0, b1, b2, b3] = b;
    let tau = t - b2;
    let e = (-b1 * tau * tau).exp();
    let k = b0 * e + b3;

    let dk = [e, -b0 * tau * tau * e, 2.0 * b0 * b1 * tau * e, 1.0];

    let mut d2k = [[0.0; 4]; 4];
    d2k[0][1] = -tau * tau * e;
    d2k[0][2] = 2.0 * b1 * tau * e;
    d2k[1][1] = b0 * tau.powi(4) * e;
    d2k[1][2] = 2.0 * b0 * tau * e * (1.0 - b1 * tau * tau);
    d2k[2][2] = 2.0 * b0 * b1 * e * (2.0 * b1 * tau * tau - 1.0);
    for i in 0..4 {
        for j in 0..i {
            d2k[i][j] = d2k[j][i];
        }
    }
    (k, dk, d2k)
}

/// Shared skeleton for the two gene-expression models; only reaction 1
/// (transcription) differs.
struct GeneRates;

impl GeneRates {
    const D: usize = 2;
    const M: usize = 4;
    const P: usize = 7;
}

fn single_gene(omega: f64) -> Result<MjpModel> {
    let (d, p) = (GeneRates::D, GeneRates::P);
    MjpModel::new(MjpModelParts {
        name: "single-gene".into(),
        n_species: d,
        n_reactions: GeneRates::M,
        n_params: p,
        omega,
        #[rustfmt::skip]
        state_change: vec![
            1, -1, 0,  0,
            0,  0, 1, -1,
        ],
        species_names: vec!["R".into(), "P".into()],
        param_names: vec![
            "gamma_R".into(),
            "k_P".into(),
            "gamma_P".into(),
            "b0".into(),
            "b1".into(),
            "b2".into(),
            "b3".into(),
        ],
        propensity: Box::new(move |x, th, t, out| {
            let (k, _, _) = transcription_rate(t, [th[3], th[4], th[5], th[6]]);
            out[0] = omega * k;
            out[1] = th[0] * x[0] as f64;
            out[2] = th[1] * x[0] as f64;
            out[3] = th[2] * x[1] as f64;
        }),
        macro_rate: Box::new(move |z, th, t, out| {
            let (k, _, _) = transcription_rate(t, [th[3], th[4], th[5], th[6]]);
            out[0] = k;
            out[1] = th[0] * z[0];
            out[2] = th[1] * z[0];
            out[3] = th[2] * z[1];
        }),
        jac_z: Box::new(move |_z, th, _t, out| {
            out[d] = th[0]; // g2 wrt r
            out[2 * d] = th[1]; // g3 wrt r
            out[3 * d + 1] = th[2]; // g4 wrt p
        }),
        jac_theta: Box::new(move |z, th, t, out| {
            let (_, dk, _) = transcription_rate(t, [th[3], th[4], th[5], th[6]]);
            for (i, v) in dk.iter().enumerate() {
                out[3 + i] = *v;
            }
            out[p] = z[0]; // g2 wrt gamma_R
            out[2 * p + 1] = z[0]; // g3 wrt k_P
            out[3 * p + 2] = z[1]; // g4 wrt gamma_P
        }),
        hessians: Some(Box::new(move |_z, th, t, bufs: &mut HessianBufs<'_>| {
            let (_, _, d2k) = transcription_rate(t, [th[3], th[4], th[5], th[6]]);
            for i in 0..4 {
                for j in 0..4 {
                    bufs.thetatheta[(3 + i) * p + (3 + j)] = d2k[i][j];
                }
            }
            bufs.ztheta[(d) * p] = 1.0; // g2: (r, gamma_R)
            bufs.ztheta[(2 * d) * p + 1] = 1.0; // g3: (r, k_P)
            bufs.ztheta[(3 * d + 1) * p + 2] = 1.0; // g4: (p, gamma_P)
        })),
        // rates are linear in the state, so every third derivative with a
        // concentration index vanishes
        third_derivs: Some(Box::new(|_z, _th, _t, _bufs: &mut ThirdDerivBufs<'_>| {})),
    })
}

fn single_gene_autoreg(omega: f64) -> Result<MjpModel> {
    let (d, p) = (GeneRates::D, GeneRates::P);
    MjpModel::new(MjpModelParts {
        name: "single-gene-autoreg".into(),
        n_species: d,
        n_reactions: GeneRates::M,
        n_params: p,
        omega,
        #[rustfmt::skip]
        state_change: vec![
            1, -1, 0,  0,
            0,  0, 1, -1,
        ],
        species_names: vec!["R".into(), "P".into()],
        param_names: vec![
            "gamma_R".into(),
            "k_P".into(),
            "gamma_P".into(),
            "b0".into(),
            "b1".into(),
            "b2".into(),
            "b3".into(),
        ],
        propensity: Box::new(move |x, th, t, out| {
            let h = eval_hill_rate(x[1] as f64 / omega, th, t);
            out[0] = omega * h.value;
            out[1] = th[0] * x[0] as f64;
            out[2] = th[1] * x[0] as f64;
            out[3] = th[2] * x[1] as f64;
        }),
        macro_rate: Box::new(move |z, th, t, out| {
            let h = eval_hill_rate(z[1], th, t);
            out[0] = h.value;
            out[1] = th[0] * z[0];
            out[2] = th[1] * z[0];
            out[3] = th[2] * z[1];
        }),
        jac_z: Box::new(move |z, th, t, out| {
            let h = eval_hill_rate(z[1], th, t);
            out[1] = h.d_p; // g1 wrt protein concentration
            out[d] = th[0];
            out[2 * d] = th[1];
            out[3 * d + 1] = th[2];
        }),
        jac_theta: Box::new(move |z, th, t, out| {
            let h = eval_hill_rate(z[1], th, t);
            out[..p].copy_from_slice(&h.d_theta);
            out[p] = z[0];
            out[2 * p + 1] = z[0];
            out[3 * p + 2] = z[1];
        }),
        hessians: Some(Box::new(move |z, th, t, bufs: &mut HessianBufs<'_>| {
            let h = eval_hill_rate(z[1], th, t);
            // g1 depends on the state only through the protein (index 1)
            bufs.zz[(0 * d + 1) * d + 1] = h.d_pp;
            for q in 0..p {
                bufs.ztheta[(0 * d + 1) * p + q] = h.d_ptheta[q];
                for r in 0..p {
                    bufs.thetatheta[(0 * p + q) * p + r] = h.d_thetatheta[q][r];
                }
            }
            bufs.ztheta[(d) * p] = 1.0;
            bufs.ztheta[(2 * d) * p + 1] = 1.0;
            bufs.ztheta[(3 * d + 1) * p + 2] = 1.0;
        })),
        third_derivs: Some(Box::new(move |z, th, t, bufs: &mut ThirdDerivBufs<'_>| {
            let h = eval_hill_rate(z[1], th, t);
            bufs.zzz[((0 * d + 1) * d + 1) * d + 1] = h.d_ppp;
            for q in 0..p {
                bufs.zztheta[((0 * d + 1) * d + 1) * p + q] = h.d_pptheta[q];
                for r in 0..p {
                    bufs.zthetatheta[((0 * d + 1) * p + q) * p + r] = h.d_pthetatheta[q][r];
                }
            }
        })),
    })
}
