use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::matching::{canonical_order, greedy_match};
use super::{Detection, GtBox};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// No ground truth and no detections above the score threshold; F1 is 1.
    pub both_empty: bool,
}

type Grouped<'a> = BTreeMap<u64, (Vec<&'a Detection>, Vec<&'a GtBox>)>;

/// Detections with `score >= score_threshold` in canonical order, and ground
/// truth, grouped by image.
fn group<'a>(dets: &'a [Detection], gts: &'a [GtBox], score_threshold: f64) -> Grouped<'a> {
    let mut by_image: Grouped<'a> = BTreeMap::new();
    for i in canonical_order(dets) {
        let d = &dets[i];
        if d.score >= score_threshold {
            by_image.entry(d.image_id).or_default().0.push(d);
        }
    }
    for g in gts {
        by_image.entry(g.image_id).or_default().1.push(g);
    }
    by_image
}

/// Class-aware F1 of the detections scoring at least `score_threshold`.
pub fn compute_f1(dets: &[Detection], gts: &[GtBox], iou_threshold: f64, score_threshold: f64) -> F1Score {
    let (mut tp, mut n_det) = (0usize, 0usize);
    for (ds, gs) in group(dets, gts, score_threshold).values() {
        n_det += ds.len();
        tp += greedy_match(ds, gs, iou_threshold, true).iter().flatten().count();
    }
    let n_gt = gts.len();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let (precision, recall) = (ratio(tp, n_det), ratio(tp, n_gt));
    let both_empty = n_det == 0 && n_gt == 0;
    let f1 = if both_empty {
        1.0
    } else if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    F1Score {
        precision,
        recall,
        f1,
        true_positives: tp,
        false_positives: n_det - tp,
        false_negatives: n_gt - tp,
        both_empty,
    }
}

/// Confusion counts from class-agnostic greedy matching.
///
/// Rows are ground-truth classes, columns predicted classes, and the last
/// row and column stand for background. The side is
/// `max(num_classes, largest class id + 1) + 1`.
pub fn confusion_matrix(
    dets: &[Detection],
    gts: &[GtBox],
    num_classes: usize,
    iou_threshold: f64,
    score_threshold: f64,
) -> Vec<Vec<u64>> {
    let largest = dets
        .iter()
        .map(|d| d.class_id)
        .chain(gts.iter().map(|g| g.class_id))
        .map(|c| c as usize + 1)
        .max()
        .unwrap_or(0);
    let bg = num_classes.max(largest);
    let mut m = vec![vec![0u64; bg + 1]; bg + 1];
    for (ds, gs) in group(dets, gts, score_threshold).values() {
        let matches = greedy_match(ds, gs, iou_threshold, false);
        let mut matched = vec![false; gs.len()];
        for (d, g) in ds.iter().zip(&matches) {
            match g {
                Some(g) => {
                    matched[*g] = true;
                    m[gs[*g].class_id as usize][d.class_id as usize] += 1;
                }
                None => m[bg][d.class_id as usize] += 1,
            }
        }
        for (g, hit) in gs.iter().zip(matched) {
            if !hit {
                m[g.class_id as usize][bg] += 1;
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbox::Box2D;

    fn gt(x: f64, class_id: u32) -> GtBox {
        GtBox { image_id: 0, class_id, bbox: Box2D::new(x, 0.0, 10.0, 10.0) }
    }

    fn det(x: f64, class_id: u32, score: f64) -> Detection {
        Detection { image_id: 0, class_id, bbox: Box2D::new(x, 0.0, 10.0, 10.0), score }
    }

    #[test]
    fn f1_arithmetic() {
        let gts = [gt(0.0, 0), gt(20.0, 0), gt(40.0, 0), gt(60.0, 0)];
        let dets = [det(0.0, 0, 0.9), det(20.0, 0, 0.8), det(100.0, 0, 0.7), det(40.0, 0, 0.2)];
        let f = compute_f1(&dets, &gts, 0.5, 0.5);
        assert_eq!((f.true_positives, f.false_positives, f.false_negatives), (2, 1, 2));
        assert!((f.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.recall, 0.5);
        assert!((f.f1 - 4.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn f1_edges() {
        let gts = [gt(0.0, 0)];
        assert_eq!(compute_f1(&[det(0.0, 0, 0.9)], &gts, 0.5, 0.5).f1, 1.0);
        assert_eq!(compute_f1(&[], &gts, 0.5, 0.5).f1, 0.0);
        assert_eq!(compute_f1(&[det(0.0, 1, 0.9)], &gts, 0.5, 0.5).f1, 0.0);
        let e = compute_f1(&[], &[], 0.5, 0.5);
        assert!(e.both_empty && e.f1 == 1.0);
    }

    #[test]
    fn cross_class_confusion() {
        let g = GtBox { image_id: 0, class_id: 0, bbox: Box2D::new(0.0, 0.0, 10.0, 10.0) };
        let d = Detection { image_id: 0, class_id: 1, bbox: Box2D::new(0.0, 0.0, 10.0, 8.0), score: 0.9 };
        let m = confusion_matrix(&[d], &[g], 2, 0.5, 0.5);
        assert_eq!(m, vec![vec![0, 1, 0], vec![0, 0, 0], vec![0, 0, 0]]);
    }

    #[test]
    fn unmatched_go_to_background() {
        let m = confusion_matrix(&[det(100.0, 1, 0.9), det(0.0, 0, 0.1)], &[gt(0.0, 0)], 2, 0.5, 0.5);
        assert_eq!(m, vec![vec![0, 0, 1], vec![0, 0, 0], vec![0, 1, 0]]);
        let total: u64 = m.iter().flatten().sum();
        assert_eq!(total, 2);
    }
}
