//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on inputs was violated (negative state, nonpositive
    /// parameter, bad dimensions, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The model does not supply the derivative order that was requested.
    #[error("model capability error: {0}")]
    Capability(String),

    #[error("unknown model '{name}'; known models: {known}")]
    UnknownModel { name: String, known: String },

    /// The ODE integrator could not reach the requested tolerance.
    #[error("integration failure at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    /// A covariance or metric failed to factorise even after jitter.
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// A posterior/target evaluation failed; samplers treat this as a
    /// rejected proposal.
    #[error("evaluation error: {0}")]
    Eval(String),

    /// A chain could not be started or aborted irrecoverably.
    #[error("chain error: {0}")]
    Chain(String),
}

impl Error {
    /// Failures that an MCMC kernel handles by rejecting the proposal
    /// rather than aborting the chain.
    pub fn is_rejectable(&self) -> bool {
        matches!(
            self,
            Error::Integration { .. } | Error::NotPositiveDefinite(_) | Error::Eval(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
