//! Covariance of the multinomial, its Gaussian analogue and Pearson's
//! statistic.

use nalgebra::DMatrix;

use crate::domain::{CountVector, Deviation, SimplexPoint};
use crate::error::{Error, Result};

/// `Sigma_p = diag(p) - p p^T`, its inverse and log-determinant, all in
/// closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceBundle {
    pub sigma: DMatrix<f64>,
    pub sigma_inv: DMatrix<f64>,
    /// `log det Sigma_p = sum_{i=1}^{d+1} log p_i`.
    pub log_det: f64,
}

impl CovarianceBundle {
    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }
}

pub fn covariance_bundle(p: &SimplexPoint) -> CovarianceBundle {
    let d = p.dim();
    let w = p.weights();
    let last_inv = 1.0 / p.last_weight();
    let sigma = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            w[i] - w[i] * w[j]
        } else {
            -w[i] * w[j]
        }
    });
    // Sigma^{-1} = diag(1/p) + (1/p_{d+1}) 1 1^T
    let sigma_inv = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            1.0 / w[i] + last_inv
        } else {
            last_inv
        }
    });
    let log_det = p.probabilities().map(f64::ln).sum();
    CovarianceBundle {
        sigma,
        sigma_inv,
        log_det,
    }
}

/// `y^T Sigma_p^{-1} y` for `y` of length `d`, using the rank-one structure.
pub fn mahalanobis(y: &[f64], p: &SimplexPoint) -> f64 {
    let head: f64 = y.iter().zip(p.weights()).map(|(yi, pi)| yi * yi / pi).sum();
    let s: f64 = y.iter().sum();
    head + s * s / p.last_weight()
}

/// Log of the centered Gaussian density with covariance `Sigma_p` at the
/// first `d` coordinates of `delta`.
pub fn log_normal_density(delta: &Deviation, bundle: &CovarianceBundle) -> Result<f64> {
    let y = delta.head();
    let d = bundle.dim();
    if y.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: y.len(),
        });
    }
    let yv = nalgebra::DVector::from_column_slice(y);
    let quad = (yv.transpose() * &bundle.sigma_inv * &yv)[(0, 0)];
    Ok(-0.5 * quad - 0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + bundle.log_det))
}

pub fn normal_density(delta: &Deviation, bundle: &CovarianceBundle) -> Result<f64> {
    log_normal_density(delta, bundle).map(f64::exp)
}

/// Pearson's statistic `sum_{i=1}^{d+1} (k_i - n p_i)^2 / (n p_i)`.
pub fn pearson_statistic(k: &CountVector, p: &SimplexPoint) -> Result<f64> {
    if k.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            actual: k.dim(),
        });
    }
    let n = k.total() as f64;
    Ok(k.categories()
        .zip(p.probabilities())
        .map(|(ki, pi)| {
            let e = n * pi;
            let r = ki as f64 - e;
            r * r / e
        })
        .sum())
}

/// The same statistic as the quadratic form `delta^T Sigma_p^{-1} delta`.
pub fn pearson_quadratic_form(k: &CountVector, p: &SimplexPoint) -> Result<f64> {
    let delta = Deviation::between(k, p)?;
    let bundle = covariance_bundle(p);
    let y = nalgebra::DVector::from_column_slice(delta.head());
    Ok((y.transpose() * &bundle.sigma_inv * &y)[(0, 0)])
}
