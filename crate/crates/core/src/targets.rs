//! Analytic targets with known moments, used to validate the samplers
//! and the generalised leapfrog integrator independently of any model.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::posterior::PosteriorBundle;
use crate::samplers::{GeometryOrder, Target};

/// Multivariate Gaussian with the metric fixed at the true precision.
pub struct CorrelatedGaussian {
    mean: DVector<f64>,
    precision: DMatrix<f64>,
}

impl CorrelatedGaussian {
    pub fn from_covariance(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let precision = cov
            .try_inverse()
            .ok_or_else(|| Error::Domain("covariance is singular".into()))?;
        Ok(Self { mean, precision })
    }

    /// Two-dimensional unit-variance Gaussian with the given correlation.
    pub fn two_dim(correlation: f64) -> Self {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, correlation, correlation, 1.0]);
        Self::from_covariance(DVector::zeros(2), cov).expect("|correlation| < 1")
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }
}

impl Target for CorrelatedGaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn evaluate(&self, theta_check: &DVector<f64>, _order: GeometryOrder) -> Result<PosteriorBundle> {
        let n = self.dim();
        let diff = theta_check - &self.mean;
        let pd = &self.precision * &diff;
        Ok(PosteriorBundle {
            theta_check: theta_check.clone(),
            log_post: -0.5 * diff.dot(&pd),
            grad: Some(-pd),
            metric: Some(self.precision.clone()),
            metric_derivs: Some(vec![DMatrix::zeros(n, n); n]),
        })
    }
}

/// Standard normal potential with the position-dependent metric
/// `G(x) = 1 + x^2`; exercises every curvature term of the kernels.
pub struct QuadraticMetric1d;

impl Target for QuadraticMetric1d {
    fn dim(&self) -> usize {
        1
    }

    fn evaluate(&self, theta_check: &DVector<f64>, _order: GeometryOrder) -> Result<PosteriorBundle> {
        let x = theta_check[0];
        Ok(PosteriorBundle {
            theta_check: theta_check.clone(),
            log_post: -0.5 * x * x,
            grad: Some(DVector::from_element(1, -x)),
            metric: Some(DMatrix::from_element(1, 1, 1.0 + x * x)),
            metric_derivs: Some(vec![DMatrix::from_element(1, 1, 2.0 * x)]),
        })
    }
}

/// Standard normal potential with metric `G(x) = exp(2x)`, whose single
/// Christoffel symbol is exactly one.
pub struct ExpMetric1d;

impl Target for ExpMetric1d {
    fn dim(&self) -> usize {
        1
    }

    fn evaluate(&self, theta_check: &DVector<f64>, _order: GeometryOrder) -> Result<PosteriorBundle> {
        let x = theta_check[0];
        let g = (2.0 * x).exp();
        Ok(PosteriorBundle {
            theta_check: theta_check.clone(),
            log_post: -0.5 * x * x,
            grad: Some(DVector::from_element(1, -x)),
            metric: Some(DMatrix::from_element(1, 1, g)),
            metric_derivs: Some(vec![DMatrix::from_element(1, 1, 2.0 * g)]),
        })
    }
}
