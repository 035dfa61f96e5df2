//! Linear-noise approximation: the macroscopic rate equation, the
//! covariance ODE, the fundamental matrix of the linearised fluctuation
//! dynamics, and first/second-order forward parameter sensitivities.
//!
//! For a model with rate law `g`, state-change matrix `S` and Jacobian
//! `J = dg/dz`, the base system on `(phi, V)` is
//!
//! ```text
//! dphi/dt = S g(phi)
//! dV/dt   = (S J) V + V (S J)^T + S diag(g) S^T
//! ```
//!
//! Sensitivities are obtained by differentiating this augmented system with
//! respect to each parameter (and parameter pair), which pulls in second
//! (and third) derivatives of the rate law. The stacked system is
//! integrated as one flat state vector; covariance-type blocks are
//! symmetrised after every accepted step.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{HessianBufs, MjpModel, ThirdDerivBufs};
use crate::ode::{integrate, OdeConfig, OdeSystem};

/// Packed storage for quantities indexed by unordered parameter pairs.
#[derive(Debug, Clone)]
pub struct SymPairs<T> {
    n: usize,
    data: Vec<T>,
}

/// Index of the unordered pair `(p, q)` in packed lower-triangular order.
pub fn pair_index(p: usize, q: usize) -> usize {
    let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
    hi * (hi + 1) / 2 + lo
}

pub fn n_pairs(n: usize) -> usize {
    n * (n + 1) / 2
}

impl<T> SymPairs<T> {
    pub fn from_vec(n: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n_pairs(n));
        Self { n, data }
    }

    pub fn get(&self, p: usize, q: usize) -> &T {
        assert!(p < self.n && q < self.n);
        &self.data[pair_index(p, q)]
    }
}

/// Mean path, covariance path and parameter sensitivities on an output
/// time grid. Second-order blocks are stored once per unordered parameter
/// pair, so symmetry in the pair index holds by construction.
#[derive(Debug, Clone)]
pub struct LnaSolution {
    pub times: Vec<f64>,
    /// Mean concentrations, one `D`-vector per output time.
    pub phi: Vec<DVector<f64>>,
    /// Fluctuation covariances (concentration scale), one `D x D` matrix
    /// per output time.
    pub cov: Vec<DMatrix<f64>>,
    /// `dphi/dtheta_p` indexed `[time][param]`.
    pub sens1_phi: Option<Vec<Vec<DVector<f64>>>>,
    /// `dV/dtheta_p` indexed `[time][param]`.
    pub sens1_cov: Option<Vec<Vec<DMatrix<f64>>>>,
    /// `d2phi/dtheta_p dtheta_q` indexed `[time][pair]`.
    pub sens2_phi: Option<Vec<SymPairs<DVector<f64>>>>,
    /// `d2V/dtheta_p dtheta_q` indexed `[time][pair]`.
    pub sens2_cov: Option<Vec<SymPairs<DMatrix<f64>>>>,
}

impl LnaSolution {
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn order(&self) -> u8 {
        if self.sens2_phi.is_some() {
            2
        } else if self.sens1_phi.is_some() {
            1
        } else {
            0
        }
    }

    pub fn sens1_phi(&self, time: usize, p: usize) -> &DVector<f64> {
        &self.sens1_phi.as_ref().expect("first-order sensitivities not computed")[time][p]
    }

    pub fn sens1_cov(&self, time: usize, p: usize) -> &DMatrix<f64> {
        &self.sens1_cov.as_ref().expect("first-order sensitivities not computed")[time][p]
    }

    pub fn sens2_phi(&self, time: usize, p: usize, q: usize) -> &DVector<f64> {
        self.sens2_phi.as_ref().expect("second-order sensitivities not computed")[time].get(p, q)
    }

    pub fn sens2_cov(&self, time: usize, p: usize, q: usize) -> &DMatrix<f64> {
        self.sens2_cov.as_ref().expect("second-order sensitivities not computed")[time].get(p, q)
    }
}

/// Propagator of the linearised fluctuation dynamics between two times.
#[derive(Debug, Clone)]
pub struct FundamentalMatrix {
    pub t_from: f64,
    pub t_to: f64,
    pub matrix: DMatrix<f64>,
}

fn validate_theta(model: &MjpModel, theta: &[f64]) -> Result<()> {
    if theta.len() != model.n_params() {
        return Err(Error::Domain(format!(
            "expected {} parameters, got {}",
            model.n_params(),
            theta.len()
        )));
    }
    if let Some(p) = theta.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
        return Err(Error::Domain(format!("nonpositive parameter {p}")));
    }
    Ok(())
}

fn validate_phi0(model: &MjpModel, phi0: &[f64]) -> Result<()> {
    if phi0.len() != model.n_species() {
        return Err(Error::Domain("initial concentration has wrong dimension".into()));
    }
    if let Some(v) = phi0.iter().find(|v| **v < 0.0 || !v.is_finite()) {
        return Err(Error::Domain(format!("negative initial concentration {v}")));
    }
    Ok(())
}

/// Solves the macroscopic rate equation `dphi = S g(phi) dt` with output
/// at `times`.
pub fn solve_mre(
    model: &MjpModel,
    theta: &[f64],
    phi0: &[f64],
    t0: f64,
    times: &[f64],
    config: &OdeConfig,
) -> Result<Vec<DVector<f64>>> {
    validate_theta(model, theta)?;
    validate_phi0(model, phi0)?;
    let mut sys = MreSystem::new(model, theta);
    let out = integrate(&mut sys, t0, phi0, times, config)?;
    Ok(out.into_iter().map(DVector::from_vec).collect())
}

/// Jointly integrates the mean, the covariance and (per `order`) their
/// stacked first- and second-order parameter sensitivities.
///
/// Sensitivities are taken with respect to the natural parameters; any
/// reparameterisation is applied downstream. `order >= 1` requires model
/// second derivatives, `order == 2` third derivatives as well.
pub fn solve_lna(
    model: &MjpModel,
    theta: &[f64],
    phi0: &[f64],
    v0: &DMatrix<f64>,
    t0: f64,
    times: &[f64],
    order: u8,
    config: &OdeConfig,
) -> Result<LnaSolution> {
    validate_theta(model, theta)?;
    validate_phi0(model, phi0)?;
    let d = model.n_species();
    if v0.nrows() != d || v0.ncols() != d {
        return Err(Error::Domain("initial covariance has wrong shape".into()));
    }
    let scale = v0.iter().fold(0.0_f64, |a, b| a.max(b.abs())).max(1.0);
    for r in 0..d {
        for c in 0..r {
            if (v0[(r, c)] - v0[(c, r)]).abs() > 1e-12 * scale {
                return Err(Error::Domain("initial covariance is not symmetric".into()));
            }
        }
    }
    if order > 2 {
        return Err(Error::Domain(format!("sensitivity order must be 0, 1 or 2, got {order}")));
    }
    if order >= 1 && !model.has_hessians() {
        return Err(Error::Capability(
            "parameter sensitivities require model second derivatives".into(),
        ));
    }
    if order == 2 && !model.has_third_derivs() {
        return Err(Error::Capability(
            "second-order sensitivities require model third derivatives".into(),
        ));
    }

    let mut sys = LnaSystem::new(model, theta, order);
    let mut y0 = vec![0.0; sys.dim()];
    y0[..d].copy_from_slice(phi0);
    for r in 0..d {
        for c in 0..d {
            y0[d + r * d + c] = v0[(r, c)];
        }
    }
    let out = integrate(&mut sys, t0, &y0, times, config)?;
    Ok(sys.unpack(times, out))
}

/// Integrates `dPhi = S J(phi_t) Phi dt` from the identity at `t_from`,
/// given the mean state `phi_from` at `t_from`.
pub fn solve_fundamental_matrix(
    model: &MjpModel,
    theta: &[f64],
    phi_from: &[f64],
    t_from: f64,
    t_to: f64,
    config: &OdeConfig,
) -> Result<FundamentalMatrix> {
    validate_theta(model, theta)?;
    validate_phi0(model, phi_from)?;
    if t_to < t_from {
        return Err(Error::Domain("t_to must not precede t_from".into()));
    }
    let d = model.n_species();
    if t_to == t_from {
        return Ok(FundamentalMatrix { t_from, t_to, matrix: DMatrix::identity(d, d) });
    }
    let (_, _, fundamental) = advance_with_propagator(
        model,
        theta,
        phi_from,
        &DMatrix::zeros(d, d),
        t_from,
        t_to,
        config,
    )?;
    Ok(FundamentalMatrix { t_from, t_to, matrix: fundamental })
}

/// Advances `(phi, V)` from `t_from` to `t_to` while accumulating the
/// fundamental matrix over the same interval. Used by the time-series
/// likelihood, where the propagator builds cross-time covariances.
pub(crate) fn advance_with_propagator(
    model: &MjpModel,
    theta: &[f64],
    phi: &[f64],
    v: &DMatrix<f64>,
    t_from: f64,
    t_to: f64,
    config: &OdeConfig,
) -> Result<(DVector<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let d = model.n_species();
    let mut sys = PropagatorSystem::new(model, theta);
    let mut y0 = vec![0.0; sys.dim()];
    y0[..d].copy_from_slice(phi);
    for r in 0..d {
        for c in 0..d {
            y0[d + r * d + c] = v[(r, c)];
        }
        y0[d + d * d + r * d + r] = 1.0;
    }
    let out = integrate(&mut sys, t_from, &y0, &[t_to], config)?;
    let y = &out[0];
    let phi_out = DVector::from_column_slice(&y[..d]);
    let v_out = DMatrix::from_row_slice(d, d, &y[d..d + d * d]);
    let fund = DMatrix::from_row_slice(d, d, &y[d + d * d..]);
    Ok((phi_out, v_out, fund))
}

/// Mean equation only.
struct MreSystem<'m> {
    model: &'m MjpModel,
    theta: Vec<f64>,
    rates: Vec<f64>,
}

impl<'m> MreSystem<'m> {
    fn new(model: &'m MjpModel, theta: &[f64]) -> Self {
        Self { model, theta: theta.to_vec(), rates: vec![0.0; model.n_reactions()] }
    }
}

impl OdeSystem for MreSystem<'_> {
    fn dim(&self) -> usize {
        self.model.n_species()
    }

    fn rhs(&mut self, t: f64, y: &[f64], dydt: &mut [f64]) {
        let (d, m) = (self.model.n_species(), self.model.n_reactions());
        self.rates.iter_mut().for_each(|v| *v = 0.0);
        self.model.eval_macro_rates_into(y, &self.theta, t, &mut self.rates);
        let s = self.model.state_change();
        for r in 0..d {
            let mut acc = 0.0;
            for j in 0..m {
                acc += s[r * m + j] as f64 * self.rates[j];
            }
            dydt[r] = acc;
        }
    }
}

/// Mean + covariance + fundamental matrix.
struct PropagatorSystem<'m> {
    model: &'m MjpModel,
    theta: Vec<f64>,
    s: Vec<f64>,
    rates: Vec<f64>,
    jz: Vec<f64>,
    a: Vec<f64>,
}

impl<'m> PropagatorSystem<'m> {
    fn new(model: &'m MjpModel, theta: &[f64]) -> Self {
        let (d, m) = (model.n_species(), model.n_reactions());
        Self {
            model,
            theta: theta.to_vec(),
            s: model.state_change().iter().map(|v| *v as f64).collect(),
            rates: vec![0.0; m],
            jz: vec![0.0; m * d],
            a: vec![0.0; d * d],
        }
    }
}

impl OdeSystem for PropagatorSystem<'_> {
    fn dim(&self) -> usize {
        let d = self.model.n_species();
        d + 2 * d * d
    }

    fn rhs(&mut self, t: f64, y: &[f64], dydt: &mut [f64]) {
        let (d, m) = (self.model.n_species(), self.model.n_reactions());
        let phi = &y[..d];
        self.rates.iter_mut().for_each(|v| *v = 0.0);
        self.jz.iter_mut().for_each(|v| *v = 0.0);
        self.model.eval_macro_rates_into(phi, &self.theta, t, &mut self.rates);
        self.model.eval_jac_z_into(phi, &self.theta, t, &mut self.jz);
        for r in 0..d {
            for c in 0..d {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += self.s[r * m + j] * self.jz[j * d + c];
                }
                self.a[r * d + c] = acc;
            }
        }
        for r in 0..d {
            let mut acc = 0.0;
            for j in 0..m {
                acc += self.s[r * m + j] * self.rates[j];
            }
            dydt[r] = acc;
        }
        let v = &y[d..d + d * d];
        let fund = &y[d + d * d..];
        let (dv, dfund) = dydt[d..].split_at_mut(d * d);
        for r in 0..d {
            for c in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += self.a[r * d + k] * v[k * d + c] + v[r * d + k] * self.a[c * d + k];
                }
                for j in 0..m {
                    acc += self.s[r * m + j] * self.s[c * m + j] * self.rates[j];
                }
                dv[r * d + c] = acc;
                let mut facc = 0.0;
                for k in 0..d {
                    facc += self.a[r * d + k] * fund[k * d + c];
                }
                dfund[r * d + c] = facc;
            }
        }
    }

    fn project(&self, y: &mut [f64]) {
        let d = self.model.n_species();
        symmetrize(&mut y[d..d + d * d], d);
    }
}

fn symmetrize(block: &mut [f64], d: usize) {
    for r in 0..d {
        for c in 0..r {
            let avg = 0.5 * (block[r * d + c] + block[c * d + r]);
            block[r * d + c] = avg;
            block[c * d + r] = avg;
        }
    }
}

/// The stacked LNA system: `(phi, V)` plus sensitivity blocks.
///
/// State layout: `[phi | V | (dphi_p, dV_p) for each p | (d2phi_pq, d2V_pq)
/// for each pair p <= q]`, every matrix row-major.
struct LnaSystem<'m> {
    model: &'m MjpModel,
    theta: Vec<f64>,
    order: u8,
    d: usize,
    m: usize,
    nt: usize,
    npairs: usize,
    blk: usize,
    off1: usize,
    off2: usize,
    s: Vec<f64>,
    // scratch, zeroed at the top of every rhs call
    rates: Vec<f64>,
    jz: Vec<f64>,
    jt: Vec<f64>,
    hzz: Vec<f64>,
    hzt: Vec<f64>,
    htt: Vec<f64>,
    tzzz: Vec<f64>,
    tzzt: Vec<f64>,
    tztt: Vec<f64>,
    a: Vec<f64>,
    // per-parameter first-order pieces, kept for the second-order terms
    mp: Vec<f64>,
    da: Vec<f64>,
    df: Vec<f64>,
    d2j: Vec<f64>,
    d2a: Vec<f64>,
    d2f: Vec<f64>,
}

impl<'m> LnaSystem<'m> {
    fn new(model: &'m MjpModel, theta: &[f64], order: u8) -> Self {
        let (d, m, nt) = (model.n_species(), model.n_reactions(), model.n_params());
        let npairs = if order == 2 { n_pairs(nt) } else { 0 };
        let blk = d + d * d;
        let off1 = blk;
        let off2 = off1 + if order >= 1 { nt * blk } else { 0 };
        let second = order == 2;
        Self {
            model,
            theta: theta.to_vec(),
            order,
            d,
            m,
            nt,
            npairs,
            blk,
            off1,
            off2,
            s: model.state_change().iter().map(|v| *v as f64).collect(),
            rates: vec![0.0; m],
            jz: vec![0.0; m * d],
            jt: if order >= 1 { vec![0.0; m * nt] } else { Vec::new() },
            hzz: if order >= 1 { vec![0.0; m * d * d] } else { Vec::new() },
            hzt: if order >= 1 { vec![0.0; m * d * nt] } else { Vec::new() },
            htt: if order >= 1 { vec![0.0; m * nt * nt] } else { Vec::new() },
            tzzz: if second { vec![0.0; m * d * d * d] } else { Vec::new() },
            tzzt: if second { vec![0.0; m * d * d * nt] } else { Vec::new() },
            tztt: if second { vec![0.0; m * d * nt * nt] } else { Vec::new() },
            a: vec![0.0; d * d],
            mp: if order >= 1 { vec![0.0; nt * m * d] } else { Vec::new() },
            da: if order >= 1 { vec![0.0; nt * d * d] } else { Vec::new() },
            df: if order >= 1 { vec![0.0; nt * m] } else { Vec::new() },
            d2j: if second { vec![0.0; m * d] } else { Vec::new() },
            d2a: if second { vec![0.0; d * d] } else { Vec::new() },
            d2f: if second { vec![0.0; m] } else { Vec::new() },
        }
    }

    fn unpack(&self, times: &[f64], states: Vec<Vec<f64>>) -> LnaSolution {
        let (d, nt) = (self.d, self.nt);
        let mut sol = LnaSolution {
            times: times.to_vec(),
            phi: Vec::with_capacity(states.len()),
            cov: Vec::with_capacity(states.len()),
            sens1_phi: (self.order >= 1).then(Vec::new),
            sens1_cov: (self.order >= 1).then(Vec::new),
            sens2_phi: (self.order == 2).then(Vec::new),
            sens2_cov: (self.order == 2).then(Vec::new),
        };
        for y in &states {
            sol.phi.push(DVector::from_column_slice(&y[..d]));
            sol.cov.push(DMatrix::from_row_slice(d, d, &y[d..d + d * d]));
            if self.order >= 1 {
                let mut phis = Vec::with_capacity(nt);
                let mut covs = Vec::with_capacity(nt);
                for p in 0..nt {
                    let base = self.off1 + p * self.blk;
                    phis.push(DVector::from_column_slice(&y[base..base + d]));
                    covs.push(DMatrix::from_row_slice(d, d, &y[base + d..base + self.blk]));
                }
                sol.sens1_phi.as_mut().unwrap().push(phis);
                sol.sens1_cov.as_mut().unwrap().push(covs);
            }
            if self.order == 2 {
                let mut phis = Vec::with_capacity(self.npairs);
                let mut covs = Vec::with_capacity(self.npairs);
                for k in 0..self.npairs {
                    let base = self.off2 + k * self.blk;
                    phis.push(DVector::from_column_slice(&y[base..base + d]));
                    covs.push(DMatrix::from_row_slice(d, d, &y[base + d..base + self.blk]));
                }
                sol.sens2_phi.as_mut().unwrap().push(SymPairs::from_vec(nt, phis));
                sol.sens2_cov.as_mut().unwrap().push(SymPairs::from_vec(nt, covs));
            }
        }
        sol
    }
}

impl OdeSystem for LnaSystem<'_> {
    fn dim(&self) -> usize {
        self.blk * (1 + if self.order >= 1 { self.nt } else { 0 } + self.npairs)
    }

    fn rhs(&mut self, t: f64, y: &[f64], dydt: &mut [f64]) {
        let Self {
            model,
            theta,
            order,
            d,
            m,
            nt,
            blk,
            off1,
            off2,
            s,
            rates,
            jz,
            jt,
            hzz,
            hzt,
            htt,
            tzzz,
            tzzt,
            tztt,
            a,
            mp,
            da,
            df,
            d2j,
            d2a,
            d2f,
            ..
        } = self;
        let (d, m, nt, blk, off1, off2, order) = (*d, *m, *nt, *blk, *off1, *off2, *order);

        let phi = &y[..d];
        let v = &y[d..d + d * d];

        rates.iter_mut().for_each(|x| *x = 0.0);
        jz.iter_mut().for_each(|x| *x = 0.0);
        model.eval_macro_rates_into(phi, theta, t, rates);
        model.eval_jac_z_into(phi, theta, t, jz);
        if order >= 1 {
            jt.iter_mut().for_each(|x| *x = 0.0);
            hzz.iter_mut().for_each(|x| *x = 0.0);
            hzt.iter_mut().for_each(|x| *x = 0.0);
            htt.iter_mut().for_each(|x| *x = 0.0);
            model.eval_jac_theta_into(phi, theta, t, jt);
            model
                .eval_hessians_into(phi, theta, t, &mut HessianBufs { zz: hzz, ztheta: hzt, thetatheta: htt })
                .expect("capability checked in solve_lna");
        }
        if order == 2 {
            tzzz.iter_mut().for_each(|x| *x = 0.0);
            tzzt.iter_mut().for_each(|x| *x = 0.0);
            tztt.iter_mut().for_each(|x| *x = 0.0);
            model
                .eval_third_derivs_into(
                    phi,
                    theta,
                    t,
                    &mut ThirdDerivBufs { zzz: tzzz, zztheta: tzzt, zthetatheta: tztt },
                )
                .expect("capability checked in solve_lna");
        }

        // A = S J
        for r in 0..d {
            for c in 0..d {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += s[r * m + j] * jz[j * d + c];
                }
                a[r * d + c] = acc;
            }
        }

        // base block
        for r in 0..d {
            let mut acc = 0.0;
            for j in 0..m {
                acc += s[r * m + j] * rates[j];
            }
            dydt[r] = acc;
        }
        for r in 0..d {
            for c in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += a[r * d + k] * v[k * d + c] + v[r * d + k] * a[c * d + k];
                }
                for j in 0..m {
                    acc += s[r * m + j] * s[c * m + j] * rates[j];
                }
                dydt[d + r * d + c] = acc;
            }
        }
        if order == 0 {
            return;
        }

        // first-order blocks
        for p in 0..nt {
            let base = off1 + p * blk;
            let phi_p = &y[base..base + d];
            let v_p = &y[base + d..base + blk];
            let mp_p = &mut mp[p * m * d..(p + 1) * m * d];
            let da_p = &mut da[p * d * d..(p + 1) * d * d];
            let df_p = &mut df[p * m..(p + 1) * m];

            for j in 0..m {
                let mut acc = jt[j * nt + p];
                for e in 0..d {
                    acc += jz[j * d + e] * phi_p[e];
                }
                df_p[j] = acc;
                for aa in 0..d {
                    let mut macc = hzt[(j * d + aa) * nt + p];
                    for e in 0..d {
                        macc += hzz[(j * d + aa) * d + e] * phi_p[e];
                    }
                    mp_p[j * d + aa] = macc;
                }
            }
            for r in 0..d {
                for c in 0..d {
                    let mut acc = 0.0;
                    for j in 0..m {
                        acc += s[r * m + j] * mp_p[j * d + c];
                    }
                    da_p[r * d + c] = acc;
                }
            }
            for r in 0..d {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += s[r * m + j] * df_p[j];
                }
                dydt[base + r] = acc;
            }
            for r in 0..d {
                for c in 0..d {
                    let mut acc = 0.0;
                    for k in 0..d {
                        acc += da_p[r * d + k] * v[k * d + c]
                            + a[r * d + k] * v_p[k * d + c]
                            + v_p[r * d + k] * a[c * d + k]
                            + v[r * d + k] * da_p[c * d + k];
                    }
                    for j in 0..m {
                        acc += s[r * m + j] * s[c * m + j] * df_p[j];
                    }
                    dydt[base + d + r * d + c] = acc;
                }
            }
        }
        if order < 2 {
            return;
        }

        // second-order blocks, one per unordered pair (p <= q)
        for q in 0..nt {
            for p in 0..=q {
                let kpair = pair_index(p, q);
                let base = off2 + kpair * blk;
                let phi_pq = &y[base..base + d];
                let v_pq = &y[base + d..base + blk];
                let phi_p = &y[off1 + p * blk..off1 + p * blk + d];
                let phi_q = &y[off1 + q * blk..off1 + q * blk + d];
                let v_p = &y[off1 + p * blk + d..off1 + (p + 1) * blk];
                let v_q = &y[off1 + q * blk + d..off1 + (q + 1) * blk];
                let mp_q = &mp[q * m * d..(q + 1) * m * d];
                let da_p = &da[p * d * d..(p + 1) * d * d];
                let da_q = &da[q * d * d..(q + 1) * d * d];

                // second total derivative of J and of the rates along the solution
                for j in 0..m {
                    let mut facc = htt[(j * nt + p) * nt + q];
                    for aa in 0..d {
                        facc += mp_q[j * d + aa] * phi_p[aa]
                            + jz[j * d + aa] * phi_pq[aa]
                            + hzt[(j * d + aa) * nt + p] * phi_q[aa];
                    }
                    d2f[j] = facc;
                    for aa in 0..d {
                        let mut acc = tztt[((j * d + aa) * nt + p) * nt + q];
                        for e in 0..d {
                            acc += hzz[(j * d + aa) * d + e] * phi_pq[e]
                                + tzzt[((j * d + aa) * d + e) * nt + q] * phi_p[e]
                                + tzzt[((j * d + aa) * d + e) * nt + p] * phi_q[e];
                            for g in 0..d {
                                acc += tzzz[((j * d + aa) * d + e) * d + g] * phi_p[e] * phi_q[g];
                            }
                        }
                        d2j[j * d + aa] = acc;
                    }
                }
                for r in 0..d {
                    for c in 0..d {
                        let mut acc = 0.0;
                        for j in 0..m {
                            acc += s[r * m + j] * d2j[j * d + c];
                        }
                        d2a[r * d + c] = acc;
                    }
                }
                for r in 0..d {
                    let mut acc = 0.0;
                    for j in 0..m {
                        acc += s[r * m + j] * d2f[j];
                    }
                    dydt[base + r] = acc;
                }
                for r in 0..d {
                    for c in 0..d {
                        let mut acc = 0.0;
                        for k in 0..d {
                            acc += d2a[r * d + k] * v[k * d + c]
                                + da_p[r * d + k] * v_q[k * d + c]
                                + da_q[r * d + k] * v_p[k * d + c]
                                + a[r * d + k] * v_pq[k * d + c]
                                + v_pq[r * d + k] * a[c * d + k]
                                + v_p[r * d + k] * da_q[c * d + k]
                                + v_q[r * d + k] * da_p[c * d + k]
                                + v[r * d + k] * d2a[c * d + k];
                        }
                        for j in 0..m {
                            acc += s[r * m + j] * s[c * m + j] * d2f[j];
                        }
                        dydt[base + d + r * d + c] = acc;
                    }
                }
            }
        }
    }

    fn project(&self, y: &mut [f64]) {
        let d = self.d;
        symmetrize(&mut y[d..d + d * d], d);
        if self.order >= 1 {
            for p in 0..self.nt {
                let base = self.off1 + p * self.blk + d;
                symmetrize(&mut y[base..base + d * d], d);
            }
        }
        if self.order == 2 {
            for k in 0..self.npairs {
                let base = self.off2 + k * self.blk + d;
                symmetrize(&mut y[base..base + d * d], d);
            }
        }
    }
}

#[cfg(test)]
mod tests;
