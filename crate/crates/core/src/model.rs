//! Markov-jump-process models: state-change matrix, propensities,
//! macroscopic rate laws and their derivatives.
//!
//! A model describes `D` species and `M` reactions. Reaction `j` fires at
//! propensity `f_j(x, theta, t)` and shifts the integer state by the `j`-th
//! column of the state-change matrix `S`. In the thermodynamic limit the
//! propensities scale as `f_j(x) -> omega * g_j(x / omega)` where `g` is the
//! macroscopic rate law used by the deterministic and linear-noise solvers.
//!
//! Derivatives of `g` with respect to concentrations and parameters are
//! supplied analytically per model. First derivatives drive the mean and
//! covariance equations, second derivatives the first-order parameter
//! sensitivities and third derivatives the second-order sensitivities.
//! [`check_model_derivatives`] verifies every supplied order against central
//! finite differences.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};

mod builtin;
mod hill;

pub use builtin::build_model;

/// Fills `out` (length `M`) with propensities at integer state `x`.
pub type PropensityFn = dyn Fn(&[i64], &[f64], f64, &mut [f64]) + Send + Sync;
/// Fills `out` (length `M`) with macroscopic rates at concentration `z`.
pub type MacroRateFn = dyn Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync;
/// Fills a row-major `M x D` (or `M x n_params`) Jacobian buffer.
pub type JacobianFn = dyn Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync;
/// Fills the three second-derivative tensors.
pub type HessianFn = dyn Fn(&[f64], &[f64], f64, &mut HessianBufs<'_>) + Send + Sync;
/// Fills the three third-derivative tensors that carry at least one
/// concentration index.
pub type ThirdDerivFn = dyn Fn(&[f64], &[f64], f64, &mut ThirdDerivBufs<'_>) + Send + Sync;

/// Second derivatives of the macroscopic rates, flat row-major buffers,
/// zeroed before the model closure runs.
pub struct HessianBufs<'a> {
    /// `d2 g_j / dz_a dz_b`, layout `[(j*D + a)*D + b]`.
    pub zz: &'a mut [f64],
    /// `d2 g_j / dz_a dtheta_p`, layout `[(j*D + a)*P + p]`.
    pub ztheta: &'a mut [f64],
    /// `d2 g_j / dtheta_p dtheta_q`, layout `[(j*P + p)*P + q]`.
    pub thetatheta: &'a mut [f64],
}

/// Third derivatives of the macroscopic rates (those with at least one
/// concentration index; pure parameter third derivatives never enter the
/// sensitivity systems).
pub struct ThirdDerivBufs<'a> {
    /// `d3 g_j / dz_a dz_b dz_c`, layout `[((j*D + a)*D + b)*D + c]`.
    pub zzz: &'a mut [f64],
    /// `d3 g_j / dz_a dz_b dtheta_p`, layout `[((j*D + a)*D + b)*P + p]`.
    pub zztheta: &'a mut [f64],
    /// `d3 g_j / dz_a dtheta_p dtheta_q`, layout `[((j*D + a)*P + p)*P + q]`.
    pub zthetatheta: &'a mut [f64],
}

/// A Markov jump process with analytic macroscopic rate derivatives.
///
/// Immutable after construction; all evaluation methods are pure functions
/// of their arguments, so a model can be shared freely across threads.
pub struct MjpModel {
    name: String,
    n_species: usize,
    n_reactions: usize,
    n_params: usize,
    omega: f64,
    /// Row-major `D x M`; column `j` is the state change of reaction `j`.
    state_change: Vec<i64>,
    species_names: Vec<String>,
    param_names: Vec<String>,
    propensity: Box<PropensityFn>,
    macro_rate: Box<MacroRateFn>,
    jac_z: Box<JacobianFn>,
    jac_theta: Box<JacobianFn>,
    hessians: Option<Box<HessianFn>>,
    third_derivs: Option<Box<ThirdDerivFn>>,
}

/// Everything needed to assemble an [`MjpModel`].
pub struct MjpModelParts {
    pub name: String,
    pub n_species: usize,
    pub n_reactions: usize,
    pub n_params: usize,
    pub omega: f64,
    pub state_change: Vec<i64>,
    pub species_names: Vec<String>,
    pub param_names: Vec<String>,
    pub propensity: Box<PropensityFn>,
    pub macro_rate: Box<MacroRateFn>,
    pub jac_z: Box<JacobianFn>,
    pub jac_theta: Box<JacobianFn>,
    pub hessians: Option<Box<HessianFn>>,
    pub third_derivs: Option<Box<ThirdDerivFn>>,
}

impl MjpModel {
    pub fn new(parts: MjpModelParts) -> Result<Self> {
        let MjpModelParts {
            name,
            n_species,
            n_reactions,
            n_params,
            omega,
            state_change,
            species_names,
            param_names,
            propensity,
            macro_rate,
            jac_z,
            jac_theta,
            hessians,
            third_derivs,
        } = parts;
        if n_species == 0 || n_reactions == 0 || n_params == 0 {
            return Err(Error::Domain("model dimensions must be positive".into()));
        }
        if !(omega > 0.0) {
            return Err(Error::Domain(format!("omega must be positive, got {omega}")));
        }
        if state_change.len() != n_species * n_reactions {
            return Err(Error::Domain("state_change has wrong shape".into()));
        }
        for j in 0..n_reactions {
            if (0..n_species).all(|d| state_change[d * n_reactions + j] == 0) {
                return Err(Error::Domain(format!(
                    "reaction {j} has an all-zero state change column"
                )));
            }
        }
        if species_names.len() != n_species || param_names.len() != n_params {
            return Err(Error::Domain("name lists do not match dimensions".into()));
        }
        Ok(Self {
            name,
            n_species,
            n_reactions,
            n_params,
            omega,
            state_change,
            species_names,
            param_names,
            propensity,
            macro_rate,
            jac_z,
            jac_theta,
            hessians,
            third_derivs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_species(&self) -> usize {
        self.n_species
    }

    pub fn n_reactions(&self) -> usize {
        self.n_reactions
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn species_names(&self) -> &[String] {
        &self.species_names
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    /// Row-major `D x M` state-change matrix.
    pub fn state_change(&self) -> &[i64] {
        &self.state_change
    }

    /// State change of species `d` under reaction `j`.
    pub fn stoich(&self, d: usize, j: usize) -> i64 {
        self.state_change[d * self.n_reactions + j]
    }

    pub fn has_hessians(&self) -> bool {
        self.hessians.is_some()
    }

    pub fn has_third_derivs(&self) -> bool {
        self.third_derivs.is_some()
    }

    fn validate_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::Domain(format!(
                "expected {} parameters, got {}",
                self.n_params,
                theta.len()
            )));
        }
        if let Some(p) = theta.iter().find(|p| !(**p > 0.0)) {
            return Err(Error::Domain(format!("nonpositive parameter {p}")));
        }
        Ok(())
    }

    /// Propensities `f(x, theta, t)` at an integer state.
    ///
    /// Errors on negative state components or nonpositive parameters;
    /// reactions whose reactants are insufficient evaluate to exactly zero.
    pub fn propensities(&self, x: &[i64], theta: &[f64], t: f64) -> Result<DVector<f64>> {
        if x.len() != self.n_species {
            return Err(Error::Domain(format!(
                "expected {} species in state, got {}",
                self.n_species,
                x.len()
            )));
        }
        if let Some(bad) = x.iter().find(|v| **v < 0) {
            return Err(Error::Domain(format!("negative state component {bad}")));
        }
        self.validate_theta(theta)?;
        let mut out = vec![0.0; self.n_reactions];
        (self.propensity)(x, theta, t, &mut out);
        if let Some(bad) = out.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Domain(format!("propensity evaluated to {bad}")));
        }
        Ok(DVector::from_vec(out))
    }

    /// Macroscopic rates `g(z, theta, t)` at a concentration vector.
    pub fn macro_rates(&self, z: &[f64], theta: &[f64], t: f64) -> Result<DVector<f64>> {
        if z.len() != self.n_species {
            return Err(Error::Domain(format!(
                "expected {} species in concentration, got {}",
                self.n_species,
                z.len()
            )));
        }
        if let Some(bad) = z.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Domain(format!("negative concentration {bad}")));
        }
        self.validate_theta(theta)?;
        let mut out = vec![0.0; self.n_reactions];
        (self.macro_rate)(z, theta, t, &mut out);
        Ok(DVector::from_vec(out))
    }

    /// Analytic derivatives of the macroscopic rates.
    ///
    /// `order == 1` returns both Jacobians; `order == 2` additionally the
    /// second-derivative tensors, failing with a capability error when the
    /// model does not supply them.
    pub fn macro_rate_derivatives(
        &self,
        z: &[f64],
        theta: &[f64],
        t: f64,
        order: u8,
    ) -> Result<RateDerivatives> {
        if !(order == 1 || order == 2) {
            return Err(Error::Domain(format!("derivative order must be 1 or 2, got {order}")));
        }
        self.macro_rates(z, theta, t)?; // runs the shared validation
        let (m, d, p) = (self.n_reactions, self.n_species, self.n_params);
        let mut jz = vec![0.0; m * d];
        let mut jt = vec![0.0; m * p];
        (self.jac_z)(z, theta, t, &mut jz);
        (self.jac_theta)(z, theta, t, &mut jt);
        let hess = if order == 2 {
            let f = self.hessians.as_ref().ok_or_else(|| {
                Error::Capability("model does not supply second derivatives".into())
            })?;
            let mut zz = vec![0.0; m * d * d];
            let mut zt = vec![0.0; m * d * p];
            let mut tt = vec![0.0; m * p * p];
            f(
                z,
                theta,
                t,
                &mut HessianBufs { zz: &mut zz, ztheta: &mut zt, thetatheta: &mut tt },
            );
            Some(RateHessians {
                zz: Tensor3::from_vec([m, d, d], zz),
                ztheta: Tensor3::from_vec([m, d, p], zt),
                thetatheta: Tensor3::from_vec([m, p, p], tt),
            })
        } else {
            None
        };
        Ok(RateDerivatives {
            jac_z: DMatrix::from_row_slice(m, d, &jz),
            jac_theta: DMatrix::from_row_slice(m, p, &jt),
            hess,
        })
    }

    // Unchecked fast paths used by the simulators and ODE right-hand sides.

    pub(crate) fn eval_propensities_into(&self, x: &[i64], theta: &[f64], t: f64, out: &mut [f64]) {
        (self.propensity)(x, theta, t, out);
    }

    pub(crate) fn eval_macro_rates_into(&self, z: &[f64], theta: &[f64], t: f64, out: &mut [f64]) {
        (self.macro_rate)(z, theta, t, out);
    }

    pub(crate) fn eval_jac_z_into(&self, z: &[f64], theta: &[f64], t: f64, out: &mut [f64]) {
        (self.jac_z)(z, theta, t, out);
    }

    pub(crate) fn eval_jac_theta_into(&self, z: &[f64], theta: &[f64], t: f64, out: &mut [f64]) {
        (self.jac_theta)(z, theta, t, out);
    }

    pub(crate) fn eval_hessians_into(
        &self,
        z: &[f64],
        theta: &[f64],
        t: f64,
        bufs: &mut HessianBufs<'_>,
    ) -> Result<()> {
        let f = self
            .hessians
            .as_ref()
            .ok_or_else(|| Error::Capability("model does not supply second derivatives".into()))?;
        f(z, theta, t, bufs);
        Ok(())
    }

    pub(crate) fn eval_third_derivs_into(
        &self,
        z: &[f64],
        theta: &[f64],
        t: f64,
        bufs: &mut ThirdDerivBufs<'_>,
    ) -> Result<()> {
        let f = self
            .third_derivs
            .as_ref()
            .ok_or_else(|| Error::Capability("model does not supply third derivatives".into()))?;
        f(z, theta, t, bufs);
        Ok(())
    }
}

impl std::fmt::Debug for MjpModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MjpModel")
            .field("name", &self.name)
            .field("n_species", &self.n_species)
            .field("n_reactions", &self.n_reactions)
            .field("n_params", &self.n_params)
            .field("omega", &self.omega)
            .field("species", &self.species_names)
            .field("params", &self.param_names)
            .finish()
    }
}

/// Dense third-order tensor with row-major layout.
#[derive(Debug, Clone)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn from_vec(dims: [usize; 3], data: Vec<f64>) -> Self {
        assert_eq!(data.len(), dims[0] * dims[1] * dims[2]);
        Self { dims, data }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dims[1] + j) * self.dims[2] + k]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Output of [`MjpModel::macro_rate_derivatives`].
#[derive(Debug, Clone)]
pub struct RateDerivatives {
    /// `M x D` Jacobian with respect to concentrations.
    pub jac_z: DMatrix<f64>,
    /// `M x n_params` Jacobian with respect to parameters.
    pub jac_theta: DMatrix<f64>,
    /// Second-derivative tensors, present when `order == 2`.
    pub hess: Option<RateHessians>,
}

#[derive(Debug, Clone)]
pub struct RateHessians {
    pub zz: Tensor3,
    pub ztheta: Tensor3,
    pub thetatheta: Tensor3,
}

/// One finite-difference discrepancy flagged by [`check_model_derivatives`].
#[derive(Debug, Clone)]
pub struct FlaggedEntry {
    pub block: &'static str,
    pub indices: Vec<usize>,
    pub analytic: f64,
    pub finite_difference: f64,
    pub rel_err: f64,
}

/// Result of comparing analytic model derivatives against central finite
/// differences at random interior points.
#[derive(Debug, Clone, Default)]
pub struct DerivativeCheckReport {
    pub n_points: usize,
    pub max_rel_err_jac_z: f64,
    pub max_rel_err_jac_theta: f64,
    pub max_rel_err_hess: f64,
    pub max_rel_err_third: f64,
    pub flagged: Vec<FlaggedEntry>,
}

impl DerivativeCheckReport {
    pub fn all_passed(&self) -> bool {
        self.flagged.is_empty()
    }
}

const FIRST_ORDER_TOL: f64 = 1e-5;
const SECOND_ORDER_TOL: f64 = 1e-4;
const THIRD_ORDER_TOL: f64 = 1e-3;

fn rel_err(a: f64, b: f64, scale: f64) -> f64 {
    // entries below the central-difference resolution (ulp of the function
    // scale divided by the step) cannot be distinguished from zero
    let floor = 1e-7 * scale.max(1.0);
    if a.abs() < floor && b.abs() < floor {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Compares each analytic derivative the model supplies against central
/// finite differences of the next-lower order at `n_points` random states
/// and parameter vectors. Entries whose relative error exceeds the
/// per-order threshold (1e-5 first order, 1e-4 second, 1e-3 third) are
/// flagged in the report; nothing is ever raised as an error.
pub fn check_model_derivatives(model: &MjpModel, n_points: usize, seed: u64) -> DerivativeCheckReport {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (m, d, p) = (model.n_reactions(), model.n_species(), model.n_params());
    let mut report = DerivativeCheckReport { n_points, ..Default::default() };

    for _ in 0..n_points {
        let z: Vec<f64> = (0..d).map(|_| rng.random_range(0.5_f64..20.0)).collect();
        let theta: Vec<f64> =
            (0..p).map(|_| (rng.random_range(-1.0_f64..1.0) * std::f64::consts::LN_10).exp()).collect();
        let t = rng.random_range(0.0..10.0);

        let mut rates = vec![0.0; m];
        model.eval_macro_rates_into(&z, &theta, t, &mut rates);
        let scale = rates.iter().fold(1.0_f64, |a, b| a.max(b.abs()));

        // First order: Jacobians against finite differences of the rates.
        let mut jz = vec![0.0; m * d];
        let mut jt = vec![0.0; m * p];
        model.eval_jac_z_into(&z, &theta, t, &mut jz);
        model.eval_jac_theta_into(&z, &theta, t, &mut jt);

        let mut lo = vec![0.0; m];
        let mut hi = vec![0.0; m];
        for a in 0..d {
            let h = 1e-5 * z[a].abs().max(1.0);
            let mut zp = z.clone();
            zp[a] += h;
            let mut zm = z.clone();
            zm[a] -= h;
            model.eval_macro_rates_into(&zp, &theta, t, &mut hi);
            model.eval_macro_rates_into(&zm, &theta, t, &mut lo);
            for j in 0..m {
                let fd = (hi[j] - lo[j]) / (2.0 * h);
                let err = rel_err(jz[j * d + a], fd, scale);
                report.max_rel_err_jac_z = report.max_rel_err_jac_z.max(err);
                if err >= FIRST_ORDER_TOL {
                    report.flagged.push(FlaggedEntry {
                        block: "jac_z",
                        indices: vec![j, a],
                        analytic: jz[j * d + a],
                        finite_difference: fd,
                        rel_err: err,
                    });
                }
            }
        }
        for q in 0..p {
            let h = 1e-5 * theta[q].abs().max(1.0);
            let mut tp = theta.clone();
            tp[q] += h;
            let mut tm = theta.clone();
            tm[q] -= h;
            model.eval_macro_rates_into(&z, &tp, t, &mut hi);
            model.eval_macro_rates_into(&z, &tm, t, &mut lo);
            for j in 0..m {
                let fd = (hi[j] - lo[j]) / (2.0 * h);
                let err = rel_err(jt[j * p + q], fd, scale);
                report.max_rel_err_jac_theta = report.max_rel_err_jac_theta.max(err);
                if err >= FIRST_ORDER_TOL {
                    report.flagged.push(FlaggedEntry {
                        block: "jac_theta",
                        indices: vec![j, q],
                        analytic: jt[j * p + q],
                        finite_difference: fd,
                        rel_err: err,
                    });
                }
            }
        }

        if model.has_hessians() {
            check_hessians(model, &z, &theta, t, scale, &mut report);
        }
        if model.has_third_derivs() {
            check_third_derivs(model, &z, &theta, t, scale, &mut report);
        }
    }
    report
}

fn eval_hessians(model: &MjpModel, z: &[f64], theta: &[f64], t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (m, d, p) = (model.n_reactions(), model.n_species(), model.n_params());
    let mut zz = vec![0.0; m * d * d];
    let mut zt = vec![0.0; m * d * p];
    let mut tt = vec![0.0; m * p * p];
    model
        .eval_hessians_into(
            z,
            theta,
            t,
            &mut HessianBufs { zz: &mut zz, ztheta: &mut zt, thetatheta: &mut tt },
        )
        .expect("caller checked has_hessians");
    (zz, zt, tt)
}

fn check_hessians(
    model: &MjpModel,
    z: &[f64],
    theta: &[f64],
    t: f64,
    scale: f64,
    report: &mut DerivativeCheckReport,
) {
    let (m, d, p) = (model.n_reactions(), model.n_species(), model.n_params());
    let (zz, zt, tt) = eval_hessians(model, z, theta, t);
    let mut flag = |block: &'static str, indices: Vec<usize>, analytic: f64, fd: f64| {
        let err = rel_err(analytic, fd, scale);
        report.max_rel_err_hess = report.max_rel_err_hess.max(err);
        if err >= SECOND_ORDER_TOL {
            report.flagged.push(FlaggedEntry { block, indices, analytic, finite_difference: fd, rel_err: err });
        }
    };

    // d(jac_z)/dz_b -> hess_zz[:, :, b]; d(jac_z)/dtheta_q -> hess_ztheta.
    let mut hi = vec![0.0; m * d];
    let mut lo = vec![0.0; m * d];
    for b in 0..d {
        let h = 1e-5 * z[b].abs().max(1.0);
        let mut zp = z.to_vec();
        zp[b] += h;
        let mut zm = z.to_vec();
        zm[b] -= h;
        model.eval_jac_z_into(&zp, theta, t, &mut hi);
        model.eval_jac_z_into(&zm, theta, t, &mut lo);
        for j in 0..m {
            for a in 0..d {
                let fd = (hi[j * d + a] - lo[j * d + a]) / (2.0 * h);
                flag("hess_zz", vec![j, a, b], zz[(j * d + a) * d + b], fd);
            }
        }
    }
    let mut hi_t = vec![0.0; m * p];
    let mut lo_t = vec![0.0; m * p];
    for q in 0..p {
        let h = 1e-5 * theta[q].abs().max(1.0);
        let mut tp = theta.to_vec();
        tp[q] += h;
        let mut tm = theta.to_vec();
        tm[q] -= h;
        model.eval_jac_z_into(z, &tp, t, &mut hi);
        model.eval_jac_z_into(z, &tm, t, &mut lo);
        model.eval_jac_theta_into(z, &tp, t, &mut hi_t);
        model.eval_jac_theta_into(z, &tm, t, &mut lo_t);
        for j in 0..m {
            for a in 0..d {
                let fd = (hi[j * d + a] - lo[j * d + a]) / (2.0 * h);
                flag("hess_ztheta", vec![j, a, q], zt[(j * d + a) * p + q], fd);
            }
            for r in 0..p {
                let fd = (hi_t[j * p + r] - lo_t[j * p + r]) / (2.0 * h);
                flag("hess_thetatheta", vec![j, r, q], tt[(j * p + r) * p + q], fd);
            }
        }
    }
}

fn check_third_derivs(
    model: &MjpModel,
    z: &[f64],
    theta: &[f64],
    t: f64,
    scale: f64,
    report: &mut DerivativeCheckReport,
) {
    let (m, d, p) = (model.n_reactions(), model.n_species(), model.n_params());
    let mut zzz = vec![0.0; m * d * d * d];
    let mut zzt = vec![0.0; m * d * d * p];
    let mut ztt = vec![0.0; m * d * p * p];
    model
        .eval_third_derivs_into(
            z,
            theta,
            t,
            &mut ThirdDerivBufs { zzz: &mut zzz, zztheta: &mut zzt, zthetatheta: &mut ztt },
        )
        .expect("caller checked has_third_derivs");
    let mut flag = |block: &'static str, indices: Vec<usize>, analytic: f64, fd: f64| {
        let err = rel_err(analytic, fd, scale);
        report.max_rel_err_third = report.max_rel_err_third.max(err);
        if err >= THIRD_ORDER_TOL {
            report.flagged.push(FlaggedEntry { block, indices, analytic, finite_difference: fd, rel_err: err });
        }
    };

    // Differences of hess_zz in z and theta, and of hess_ztheta in theta.
    for c in 0..d {
        let h = 1e-4 * z[c].abs().max(1.0);
        let mut zp = z.to_vec();
        zp[c] += h;
        let mut zm = z.to_vec();
        zm[c] -= h;
        let (zz_p, _, _) = eval_hessians(model, &zp, theta, t);
        let (zz_m, _, _) = eval_hessians(model, &zm, theta, t);
        for j in 0..m {
            for a in 0..d {
                for b in 0..d {
                    let k = (j * d + a) * d + b;
                    let fd = (zz_p[k] - zz_m[k]) / (2.0 * h);
                    flag("third_zzz", vec![j, a, b, c], zzz[k * d + c], fd);
                }
            }
        }
    }
    for q in 0..p {
        let h = 1e-4 * theta[q].abs().max(1.0);
        let mut tp = theta.to_vec();
        tp[q] += h;
        let mut tm = theta.to_vec();
        tm[q] -= h;
        let (zz_p, zt_p, _) = eval_hessians(model, z, &tp, t);
        let (zz_m, zt_m, _) = eval_hessians(model, z, &tm, t);
        for j in 0..m {
            for a in 0..d {
                for b in 0..d {
                    let k = (j * d + a) * d + b;
                    let fd = (zz_p[k] - zz_m[k]) / (2.0 * h);
                    flag("third_zztheta", vec![j, a, b, q], zzt[k * p + q], fd);
                }
                for r in 0..p {
                    let k = (j * d + a) * p + r;
                    let fd = (zt_p[k] - zt_m[k]) / (2.0 * h);
                    flag("third_zthetatheta", vec![j, a, r, q], ztt[k * p + q], fd);
                }
            }
        }
    }
}
