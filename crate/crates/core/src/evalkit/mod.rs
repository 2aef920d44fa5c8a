//! Detection metrics: IoU, class-wise NMS, COCO-style AP and mAP, F1 at fixed
//! thresholds and the confusion matrix.

mod counts;
pub mod io;
mod map;
mod matching;

use serde::{Deserialize, Serialize};

use crate::bbox::Box2D;

pub use counts::{compute_f1, confusion_matrix, F1Score};
pub use map::{coco_iou_thresholds, compute_map, MapResult, MAX_DETECTIONS, RECALL_POINTS};
pub use matching::{canonical_order, greedy_match};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub image_id: u64,
    pub class_id: u32,
    pub bbox: Box2D,
    pub score: f64,
}

impl Detection {
    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.score) && self.bbox.is_well_formed()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtBox {
    pub image_id: u64,
    pub class_id: u32,
    pub bbox: Box2D,
}

/// Intersection over union; 0 when the union is empty.
pub fn iou(a: &Box2D, b: &Box2D) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union > 0.0 {
        (inter / union).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Greedy class-wise NMS within each image.
///
/// Candidates are visited by descending score, then lower box x, then lower
/// class id; a candidate is dropped when its IoU with an already kept
/// detection of the same image and class exceeds `iou_threshold`. The output
/// keeps that visiting order.
pub fn nms(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&dets[i], &dets[j]);
        b.score
            .total_cmp(&a.score)
            .then(a.bbox.x.total_cmp(&b.bbox.x))
            .then(a.class_id.cmp(&b.class_id))
            .then(i.cmp(&j))
    });
    let mut kept: Vec<Detection> = Vec::new();
    for i in order {
        let d = &dets[i];
        let suppressed = kept
            .iter()
            .any(|k| k.image_id == d.image_id && k.class_id == d.class_id && iou(&k.bbox, &d.bbox) > iou_threshold);
        if !suppressed {
            kept.push(*d);
        }
    }
    kept
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    pub score_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            score_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub class_id: u32,
    /// AP at each of [`EvalResult::iou_thresholds`].
    pub ap: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub iou_thresholds: Vec<f64>,
    pub per_class_ap: Vec<ClassAp>,
    pub map_50: f64,
    pub map_5095: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `(C+1) x (C+1)`, rows ground truth, columns prediction; index `C` is
    /// background.
    pub confusion_matrix: Vec<Vec<u64>>,
    pub warnings: Vec<String>,
}

/// Full metric bundle at the COCO IoU thresholds.
pub fn evaluate(dets: &[Detection], gts: &[GtBox], num_classes: usize, cfg: &EvalConfig) -> EvalResult {
    let thresholds = coco_iou_thresholds();
    let m = compute_map(dets, gts, &thresholds);
    let f = compute_f1(dets, gts, cfg.iou_threshold, cfg.score_threshold);
    let mut warnings = Vec::new();
    if m.empty {
        warnings.push("no ground-truth classes to average over; mAP reported as 0".to_string());
    }
    if f.both_empty {
        warnings.push("no ground truth and no detections above the score threshold; F1 reported as 1".to_string());
    }
    EvalResult {
        per_class_ap: m
            .per_class
            .iter()
            .map(|(c, ap)| ClassAp { class_id: *c, ap: ap.clone() })
            .collect(),
        map_50: m.mean_at(0),
        map_5095: m.mean(),
        precision: f.precision,
        recall: f.recall,
        f1: f.f1,
        confusion_matrix: confusion_matrix(dets, gts, num_classes, cfg.iou_threshold, cfg.score_threshold),
        iou_thresholds: thresholds,
        warnings,
    }
}
