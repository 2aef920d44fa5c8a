//! Synthetic detector with a planted optimal scale, for exercising the
//! search without a neural network.

use serde::{Deserialize, Serialize};

use super::adapter::{AdapterError, DetectorAdapter};
use crate::bbox::Box2D;
use crate::evalkit::{Detection, GtBox};
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    /// Scale at which every object is found.
    pub optimum: f64,
    /// Standard deviation of the quality bump in `ln(scale)`.
    pub width: f64,
    /// Largest per-object detection threshold.
    pub max_threshold: f64,
    pub seed: u64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            optimum: 1.5,
            width: 0.3,
            max_threshold: 0.995,
            seed: 0,
        }
    }
}

/// Object `i` is found when `quality(scale) > threshold_i`; the thresholds
/// are `max_threshold * k / n` for `k = 1..=n` in seeded order. A missed
/// object yields a box displaced by twice its height, so with `k` of `n`
/// found, precision and recall are both `k / n`.
#[derive(Debug, Clone)]
pub struct OracleDetector {
    pub params: OracleParams,
    gt: Vec<GtBox>,
    thresholds: Vec<f64>,
}

impl OracleDetector {
    pub fn new(gt: Vec<GtBox>, params: OracleParams) -> Self {
        let n = gt.len();
        let mut ranks: Vec<usize> = (1..=n).collect();
        CounterRng::new(params.seed).shuffle(&mut ranks);
        let thresholds = ranks
            .into_iter()
            .map(|k| params.max_threshold * k as f64 / n as f64)
            .collect();
        Self { params, gt, thresholds }
    }

    pub fn quality(&self, scale: f64) -> f64 {
        let d = (scale / self.params.optimum).ln();
        (-d * d / (2.0 * self.params.width * self.params.width)).exp()
    }

    pub fn detections(&self, scale: f64) -> Vec<Detection> {
        let q = self.quality(scale);
        let score = 0.5 + 0.5 * q;
        self.gt
            .iter()
            .zip(&self.thresholds)
            .map(|(g, &u)| {
                let bbox = if q > u {
                    g.bbox
                } else {
                    Box2D::new(g.bbox.x, g.bbox.y + 2.0 * g.bbox.h, g.bbox.w, g.bbox.h)
                };
                Detection { image_id: g.image_id, class_id: g.class_id, bbox, score }
            })
            .collect()
    }
}

impl DetectorAdapter for OracleDetector {
    fn detect(&mut self, _image: &str, scale: f64) -> Result<Vec<Detection>, AdapterError> {
        Ok(self.detections(scale))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalkit::compute_f1;

    fn gt(n: usize) -> Vec<GtBox> {
        (0..n)
            .map(|i| GtBox { image_id: 0, class_id: (i % 3) as u32, bbox: Box2D::new(20.0 * i as f64, 10.0, 15.0, 40.0) })
            .collect()
    }

    #[test]
    fn f1_is_found_fraction() {
        let o = OracleDetector::new(gt(20), OracleParams::default());
        assert_eq!(compute_f1(&o.detections(1.5), &o.gt, 0.5, 0.5).f1, 1.0);
        for s in [0.5, 1.0, 1.3, 2.0, 3.0] {
            let q = o.quality(s);
            let found = o.thresholds.iter().filter(|&&u| q > u).count();
            let f = compute_f1(&o.detections(s), &o.gt, 0.5, 0.5).f1;
            assert!((f - found as f64 / 20.0).abs() < 1e-12, "scale {s}");
        }
    }

    #[test]
    fn f1_decreases_away_from_optimum() {
        let o = OracleDetector::new(gt(25), OracleParams { optimum: 0.8, ..Default::default() });
        let f = |s: f64| compute_f1(&o.detections(s), &o.gt, 0.5, 0.5).f1;
        assert!(f(0.8) >= f(1.0) && f(1.0) >= f(1.4) && f(1.4) >= f(3.0));
        assert!(f(0.8) > f(3.0));
    }
}
