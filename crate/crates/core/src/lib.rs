//! Bayesian inference of rate parameters in Markov jump processes.
//!
//! The jump process is approximated near its thermodynamic limit by the
//! linear noise approximation, which turns discretely observed molecule
//! counts into a tractable Gaussian likelihood. On top of that likelihood
//! the crate provides analytic gradients, the expected Fisher information
//! and its parameter derivatives, and four MCMC kernels — random-walk
//! Metropolis-within-Gibbs, simplified and full manifold MALA, and
//! Riemann-manifold HMC with a generalised leapfrog integrator.
//!
//! Module map:
//! * [`model`] — reaction networks with analytic rate derivatives, plus the
//!   built-in benchmark models.
//! * [`sim`] — exact Gillespie simulation, the chemical Langevin diffusion
//!   and replicate dataset generation.
//! * [`ode`] — adaptive Runge–Kutta integration.
//! * [`lna`] — mean/covariance equations, fundamental matrix and forward
//!   parameter sensitivities.
//! * [`posterior`] — Gaussian likelihoods, priors, the log10
//!   reparameterisation and the sampler-facing geometry bundle.
//! * [`samplers`] — MCMC kernels and chain orchestration.
//! * [`targets`] — analytic reference targets used for validation.
//! * [`diagnostics`] — effective sample size and chain summaries.

pub mod diagnostics;
pub mod error;
pub mod fdcheck;
pub mod lna;
pub mod model;
pub mod ode;
pub mod posterior;
pub mod samplers;
pub mod sim;
pub mod targets;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use sim::SimRng;
