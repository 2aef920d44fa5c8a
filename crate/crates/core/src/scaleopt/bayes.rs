//! Per-image Bayesian optimization of the rescaling factor.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use thiserror::Error;

use super::adapter::{AdapterError, DetectorAdapter};
use super::gp::{GaussianProcess, GpConfig, GpError};
use crate::evalkit::{compute_f1, GtBox};
use crate::rng::{derive_seed, CounterRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleSearchConfig {
    pub bounds: [f64; 2],
    pub init_points: u32,
    pub iterations: u32,
    /// Kernel over `ln(scale)`.
    pub kernel: GpConfig,
    pub xi: f64,
    pub grid_points: u32,
    pub iou_threshold: f64,
    pub score_threshold: f64,
    pub seed: u64,
}

impl Default for ScaleSearchConfig {
    fn default() -> Self {
        Self {
            bounds: [0.5, 3.0],
            init_points: 5,
            iterations: 20,
            kernel: GpConfig::default(),
            xi: 0.01,
            grid_points: 1001,
            iou_threshold: 0.5,
            score_threshold: 0.5,
            seed: 0,
        }
    }
}

impl ScaleSearchConfig {
    pub fn validate(&self) -> Result<(), ScaleOptError> {
        let bad = |m: &str| Err(ScaleOptError::InvalidConfig(m.to_string()));
        let [lo, hi] = self.bounds;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return bad("bounds must satisfy 0 < s_min < s_max");
        }
        if self.init_points == 0 {
            return bad("init_points must be at least 1");
        }
        if self.grid_points < 2 {
            return bad("grid_points must be at least 2");
        }
        if !(self.xi.is_finite() && self.xi >= 0.0) {
            return bad("xi must be non-negative");
        }
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !(unit(self.iou_threshold) && unit(self.score_threshold)) {
            return bad("thresholds must lie in (0, 1)");
        }
        self.kernel.validate().map_err(|e| ScaleOptError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub scale: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleOptResult {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    pub best_scale: f64,
    pub best_f1: f64,
    pub trace: Vec<TracePoint>,
    pub evaluations_used: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ScaleOptError {
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("detector failed at scale {scale}: {source}")]
    Detector {
        scale: f64,
        #[source]
        source: AdapterError,
    },
    #[error("objective returned non-finite value at scale {0}")]
    NonFinite(f64),
    #[error(transparent)]
    Gp(#[from] GpError),
}

/// Expected improvement over `best` for a maximization problem; never negative.
pub fn expected_improvement(mean: f64, variance: f64, best: f64, xi: f64) -> f64 {
    let gain = mean - best - xi;
    let sigma = variance.max(0.0).sqrt();
    if sigma <= 0.0 {
        return gain.max(0.0);
    }
    let z = gain / sigma;
    let n = Normal::standard();
    (gain * n.cdf(z) + sigma * n.pdf(z)).max(0.0)
}

fn radical_inverse_base2(mut i: u64) -> f64 {
    let (mut v, mut f) = (0.0, 0.5);
    while i > 0 {
        if i & 1 == 1 {
            v += f;
        }
        i >>= 1;
        f *= 0.5;
    }
    v
}

/// Low-discrepancy initial design in log-scale: the van der Corput points
/// `1..=n` rotated by a seeded shift.
pub fn initial_design(cfg: &ScaleSearchConfig) -> Vec<f64> {
    let (a, b) = (cfg.bounds[0].ln(), cfg.bounds[1].ln());
    let shift = CounterRng::new(derive_seed(cfg.seed, 0)).next_f64();
    (1..=cfg.init_points as u64)
        .map(|i| {
            let u = (radical_inverse_base2(i) + shift).fract();
            (a + u * (b - a)).exp().clamp(cfg.bounds[0], cfg.bounds[1])
        })
        .collect()
}

/// Maximizes `objective` over the scale bounds.
///
/// Evaluates the initial design, then for each iteration fits the GP to all
/// `(ln s, f1)` pairs (prior mean: their average), and evaluates the grid
/// point of largest expected improvement that has not been evaluated yet.
/// The best observation wins; ties go to the earliest.
pub fn optimize_with<E, F>(cfg: &ScaleSearchConfig, mut objective: F) -> Result<ScaleOptResult, ScaleOptError>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: Into<AdapterError>,
{
    cfg.validate()?;
    let mut trace: Vec<TracePoint> = Vec::new();
    let mut eval = |scale: f64, trace: &mut Vec<TracePoint>| -> Result<(), ScaleOptError> {
        let f1 = objective(scale).map_err(|e| ScaleOptError::Detector { scale, source: e.into() })?;
        if !f1.is_finite() {
            return Err(ScaleOptError::NonFinite(scale));
        }
        trace.push(TracePoint { scale, f1 });
        Ok(())
    };
    for s in initial_design(cfg) {
        eval(s, &mut trace)?;
    }
    let (a, b) = (cfg.bounds[0].ln(), cfg.bounds[1].ln());
    let n = cfg.grid_points as usize;
    let grid: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    let mut used = vec![false; n];
    for _ in 0..cfg.iterations {
        let xs: Vec<f64> = trace.iter().map(|t| t.scale.ln()).collect();
        let ys: Vec<f64> = trace.iter().map(|t| t.f1).collect();
        let prior = ys.iter().sum::<f64>() / ys.len() as f64;
        let gp = GaussianProcess::fit(&xs, &ys, prior, cfg.kernel)?;
        let best = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut pick: Option<(usize, f64)> = None;
        for (i, &x) in grid.iter().enumerate() {
            if used[i] {
                continue;
            }
            let (m, v) = gp.predict(x);
            let ei = expected_improvement(m, v, best, cfg.xi);
            if pick.is_none_or(|(_, e)| ei > e) {
                pick = Some((i, ei));
            }
        }
        let Some((i, _)) = pick else { break };
        used[i] = true;
        eval(grid[i].exp().clamp(cfg.bounds[0], cfg.bounds[1]), &mut trace)?;
    }
    let best = trace
        .iter()
        .fold(trace[0], |acc, t| if t.f1 > acc.f1 { *t } else { acc });
    Ok(ScaleOptResult {
        image: None,
        best_scale: best.scale,
        best_f1: best.f1,
        evaluations_used: trace.len(),
        trace,
        warnings: Vec::new(),
    })
}

/// Searches the scale that maximizes the detector's F1 on one image.
pub fn optimize_scale(
    image: &str,
    detector: &mut dyn DetectorAdapter,
    gt: &[GtBox],
    cfg: &ScaleSearchConfig,
) -> Result<ScaleOptResult, ScaleOptError> {
    let mut result = optimize_with(cfg, |scale| -> Result<f64, AdapterError> {
        let dets = detector.detect(image, scale)?;
        Ok(compute_f1(&dets, gt, cfg.iou_threshold, cfg.score_threshold).f1)
    })?;
    result.image = Some(image.to_string());
    if gt.is_empty() {
        result.warnings.push("image has no ground truth; F1 is 1 only when nothing is detected".into());
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn ei_properties() {
        assert_eq!(expected_improvement(0.5, 0.0, 0.5, 0.0), 0.0);
        assert!(expected_improvement(0.0, 1.0, 10.0, 0.01) >= 0.0);
        assert!(expected_improvement(0.6, 0.01, 0.5, 0.01) > expected_improvement(0.4, 0.01, 0.5, 0.01));
    }

    #[test]
    fn design_is_in_bounds_and_distinct() {
        let cfg = ScaleSearchConfig { seed: 9, ..Default::default() };
        let d = initial_design(&cfg);
        assert_eq!(d.len(), 5);
        assert!(d.iter().all(|s| (0.5..=3.0).contains(s)));
        for i in 0..d.len() {
            for j in 0..i {
                assert_ne!(d[i], d[j]);
            }
        }
    }

    #[test]
    fn flat_objective() {
        let r = optimize_with(&ScaleSearchConfig::default(), |_| Ok::<_, Infallible>(0.7)).unwrap();
        assert_eq!(r.best_f1, 0.7);
        assert!((0.5..=3.0).contains(&r.best_scale));
        assert_eq!(r.evaluations_used, 25);
    }

    #[test]
    fn zero_iterations() {
        let cfg = ScaleSearchConfig { iterations: 0, ..Default::default() };
        let f = |s: f64| -(s - 2.0).abs();
        let r = optimize_with(&cfg, |s| Ok::<_, Infallible>(f(s))).unwrap();
        assert_eq!(r.trace.len(), 5);
        let d = initial_design(&cfg);
        let best = d.iter().copied().max_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap();
        assert_eq!(r.best_scale, best);
    }

    #[test]
    fn finds_smooth_peak() {
        for seed in 0..10 {
            let cfg = ScaleSearchConfig { seed, ..Default::default() };
            let r = optimize_with(&cfg, |s: f64| Ok::<_, Infallible>(-(s.ln() - 1.5f64.ln()).powi(2))).unwrap();
            assert!((r.best_scale - 1.5).abs() < 0.02, "seed {seed}: {}", r.best_scale);
        }
    }

    #[test]
    fn errors_carry_scale() {
        let r = optimize_with(&ScaleSearchConfig::default(), |s| {
            if s > 0.0 {
                Err(AdapterError::Protocol("boom".into()))
            } else {
                Ok(0.0)
            }
        });
        assert!(matches!(r, Err(ScaleOptError::Detector { .. })));
    }
}
