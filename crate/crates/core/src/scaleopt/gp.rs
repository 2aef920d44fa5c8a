//! Exact 1-D Gaussian-process regression with a Matérn-5/2 kernel.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpConfig {
    pub length_scale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            length_scale: 0.3,
            signal_variance: 0.25,
            noise_variance: 1e-4,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<(), GpError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.length_scale) && ok(self.signal_variance) && self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(GpError::BadHyperparameters);
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("kernel hyperparameters must be positive and finite")]
    BadHyperparameters,
    #[error("observations must be finite")]
    NonFinite,
    #[error("covariance matrix is not positive definite even with jitter {0}")]
    Singular(f64),
}

pub fn matern52(r: f64, cfg: &GpConfig) -> f64 {
    let a = 5f64.sqrt() * r.abs() / cfg.length_scale;
    cfg.signal_variance * (1.0 + a + a * a / 3.0) * (-a).exp()
}

/// Posterior of a zero-centered GP shifted by a constant prior mean.
#[derive(Debug, Clone)]
pub struct GaussianProcess {
    cfg: GpConfig,
    prior_mean: f64,
    xs: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    /// Diagonal jitter that was needed on top of the noise variance.
    pub jitter: f64,
}

const JITTER_START: f64 = 1e-12;
const JITTER_MAX: f64 = 1e-4;

impl GaussianProcess {
    /// Fits to `(x, y)` pairs. Singular covariances get diagonal jitter
    /// starting at 1e-12 times the signal variance and growing tenfold up to
    /// 1e-4 times; beyond that the fit fails.
    pub fn fit(xs: &[f64], ys: &[f64], prior_mean: f64, cfg: GpConfig) -> Result<GaussianProcess, GpError> {
        cfg.validate()?;
        assert_eq!(xs.len(), ys.len());
        if !(xs.iter().chain(ys).all(|v| v.is_finite()) && prior_mean.is_finite()) {
            return Err(GpError::NonFinite);
        }
        let n = xs.len();
        let k = DMatrix::from_fn(n, n, |i, j| matern52(xs[i] - xs[j], &cfg))
            + DMatrix::identity(n, n) * cfg.noise_variance;
        let mut jitter = 0.0;
        let chol = loop {
            if let Some(c) = (&k + DMatrix::identity(n, n) * jitter).cholesky() {
                break c;
            }
            jitter = if jitter == 0.0 { JITTER_START * cfg.signal_variance } else { jitter * 10.0 };
            if jitter > JITTER_MAX * cfg.signal_variance * (1.0 + 1e-9) {
                return Err(GpError::Singular(jitter / 10.0));
            }
            log::debug!("covariance not positive definite, retrying with jitter {jitter:e}");
        };
        let alpha = chol.solve(&DVector::from_iterator(n, ys.iter().map(|y| y - prior_mean)));
        Ok(GaussianProcess {
            cfg,
            prior_mean,
            xs: xs.to_vec(),
            chol,
            alpha,
            jitter,
        })
    }

    /// Posterior mean and variance (clamped at 0) of the latent function.
    pub fn predict(&self, x: f64) -> (f64, f64) {
        let ks = DVector::from_iterator(self.xs.len(), self.xs.iter().map(|xi| matern52(x - xi, &self.cfg)));
        let mean = self.prior_mean + ks.dot(&self.alpha);
        let v = self.chol.l_dirty().solve_lower_triangular(&ks).expect("Cholesky factor has a positive diagonal");
        let var = self.cfg.signal_variance - v.norm_squared();
        (mean, var.max(0.0))
    }
}

/// Posterior at `queries` from `(scale, f1)` observations, in log-scale
/// coordinates, with the observation mean as prior mean.
pub fn gp_fit_predict(observations: &[(f64, f64)], queries: &[f64], cfg: GpConfig) -> Result<Vec<(f64, f64)>, GpError> {
    if observations.iter().any(|(s, _)| !(*s > 0.0)) || queries.iter().any(|s| !(*s > 0.0)) {
        return Err(GpError::NonFinite);
    }
    let xs: Vec<f64> = observations.iter().map(|(s, _)| s.ln()).collect();
    let ys: Vec<f64> = observations.iter().map(|(_, y)| *y).collect();
    let prior = if ys.is_empty() { 0.0 } else { ys.iter().sum::<f64>() / ys.len() as f64 };
    let gp = GaussianProcess::fit(&xs, &ys, prior, cfg)?;
    Ok(queries.iter().map(|q| gp.predict(q.ln())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_shape() {
        let c = GpConfig::default();
        assert_eq!(matern52(0.0, &c), 0.25);
        assert!(matern52(0.3, &c) < 0.25 && matern52(0.3, &c) > matern52(0.6, &c));
        assert_eq!(matern52(0.2, &c), matern52(-0.2, &c));
    }

    #[test]
    fn interpolates_observations() {
        let cfg = GpConfig { noise_variance: 1e-12, ..GpConfig::default() };
        let obs = [(0.7, 0.3), (1.2, 0.9), (2.5, 0.1)];
        let post = gp_fit_predict(&obs, &[0.7, 1.2, 2.5], cfg).unwrap();
        for ((_, y), (m, v)) in obs.iter().zip(post) {
            assert!((m - y).abs() < 1e-6);
            assert!(v >= 0.0 && v < 1e-6);
        }
    }

    #[test]
    fn reverts_to_prior_far_away() {
        let cfg = GpConfig::default();
        let gp = GaussianProcess::fit(&[0.0, 0.1], &[0.9, 0.8], 0.3, cfg).unwrap();
        let (m, v) = gp.predict(50.0);
        assert!((m - 0.3).abs() < 1e-6);
        assert!((v - 0.25).abs() < 0.0025);
    }

    #[test]
    fn zero_observations_is_prior() {
        let gp = GaussianProcess::fit(&[], &[], 0.4, GpConfig::default()).unwrap();
        assert_eq!(gp.predict(1.0), (0.4, 0.25));
    }

    #[test]
    fn duplicate_points_need_jitter() {
        let cfg = GpConfig { noise_variance: 0.0, ..GpConfig::default() };
        let gp = GaussianProcess::fit(&[0.5, 0.5], &[1.0, 1.0], 0.0, cfg).unwrap();
        assert!(gp.jitter > 0.0);
        assert!((gp.predict(0.5).0 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn recovers_quadratic_peak() {
        let f = |s: f64| -(s - 1.5) * (s - 1.5);
        let obs: Vec<(f64, f64)> = [1.0, 1.25, 1.5, 1.75, 2.0].iter().map(|&s| (s, f(s))).collect();
        let grid: Vec<f64> = (0..=250).map(|i| 0.5 + 0.01 * i as f64).collect();
        let post = gp_fit_predict(&obs, &grid, GpConfig::default()).unwrap();
        let best = (0..grid.len()).max_by(|&a, &b| post[a].0.total_cmp(&post[b].0)).unwrap();
        assert!((grid[best] - 1.5).abs() <= 0.05, "argmax {}", grid[best]);
    }
}
