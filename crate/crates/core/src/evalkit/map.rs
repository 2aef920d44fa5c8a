use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::matching::{canonical_order, greedy_match};
use super::{Detection, GtBox};

/// Detections kept per image and class, highest scores first.
pub const MAX_DETECTIONS: usize = 100;
/// Recall grid `0, 0.01, ..., 1`.
pub const RECALL_POINTS: usize = 101;

/// `0.50, 0.55, ..., 0.95`.
pub fn coco_iou_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    pub iou_thresholds: Vec<f64>,
    /// AP per threshold for every class present in the ground truth.
    pub per_class: Vec<(u32, Vec<f64>)>,
    /// No ground-truth class to average over.
    pub empty: bool,
}

impl MapResult {
    /// Mean AP over classes at threshold `k`; 0 when empty.
    pub fn mean_at(&self, k: usize) -> f64 {
        if self.per_class.is_empty() {
            return 0.0;
        }
        self.per_class.iter().map(|(_, ap)| ap[k]).sum::<f64>() / self.per_class.len() as f64
    }

    /// Mean AP over classes and thresholds; 0 when empty.
    pub fn mean(&self) -> f64 {
        if self.iou_thresholds.is_empty() {
            return 0.0;
        }
        (0..self.iou_thresholds.len()).map(|k| self.mean_at(k)).sum::<f64>() / self.iou_thresholds.len() as f64
    }
}

/// 101-point interpolated AP from true-positive flags in ranking order.
pub(crate) fn interpolated_ap(tp: &[bool], positives: usize) -> f64 {
    if positives == 0 {
        return 0.0;
    }
    let mut precision = Vec::with_capacity(tp.len());
    let mut recall = Vec::with_capacity(tp.len());
    let (mut t, mut f) = (0usize, 0usize);
    for &hit in tp {
        if hit {
            t += 1;
        } else {
            f += 1;
        }
        precision.push(t as f64 / (t + f) as f64);
        recall.push(t as f64 / positives as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut sum = 0.0;
    for r in 0..RECALL_POINTS {
        let level = r as f64 / (RECALL_POINTS - 1) as f64;
        let i = recall.partition_point(|&x| x < level);
        if i < precision.len() {
            sum += precision[i];
        }
    }
    sum / RECALL_POINTS as f64
}

/// COCO-style AP per ground-truth class and IoU threshold.
///
/// Within each image and class, detections (at most [`MAX_DETECTIONS`]) are
/// greedily matched in descending score order; the per-class ranking is the
/// canonical order of [`canonical_order`]. Classes without ground truth are
/// left out of every mean.
pub fn compute_map(dets: &[Detection], gts: &[GtBox], iou_thresholds: &[f64]) -> MapResult {
    let classes: BTreeSet<u32> = gts.iter().map(|g| g.class_id).collect();
    let mut gt_groups: BTreeMap<(u32, u64), Vec<&GtBox>> = BTreeMap::new();
    for g in gts {
        gt_groups.entry((g.class_id, g.image_id)).or_default().push(g);
    }
    let mut det_groups: BTreeMap<(u32, u64), Vec<usize>> = BTreeMap::new();
    for i in canonical_order(dets) {
        let d = &dets[i];
        if classes.contains(&d.class_id) {
            let v = det_groups.entry((d.class_id, d.image_id)).or_default();
            if v.len() < MAX_DETECTIONS {
                v.push(i);
            }
        }
    }
    let mut rank = vec![0usize; dets.len()];
    for (r, i) in canonical_order(dets).into_iter().enumerate() {
        rank[i] = r;
    }
    let per_class = classes
        .iter()
        .map(|&c| {
            let positives: usize = gt_groups.range((c, 0)..=(c, u64::MAX)).map(|(_, v)| v.len()).sum();
            let aps = iou_thresholds
                .iter()
                .map(|&t| {
                    let mut flagged: Vec<(usize, bool)> = Vec::new();
                    for (&(_, image), idx) in det_groups.range((c, 0)..=(c, u64::MAX)) {
                        let ds: Vec<&Detection> = idx.iter().map(|&i| &dets[i]).collect();
                        let gs = gt_groups.get(&(c, image)).map(Vec::as_slice).unwrap_or(&[]);
                        let m = greedy_match(&ds, gs, t, true);
                        flagged.extend(idx.iter().zip(m).map(|(&i, m)| (rank[i], m.is_some())));
                    }
                    flagged.sort_unstable_by_key(|&(r, _)| r);
                    let tp: Vec<bool> = flagged.into_iter().map(|(_, hit)| hit).collect();
                    interpolated_ap(&tp, positives)
                })
                .collect();
            (c, aps)
        })
        .collect::<Vec<_>>();
    MapResult {
        iou_thresholds: iou_thresholds.to_vec(),
        empty: per_class.is_empty(),
        per_class,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbox::Box2D;

    #[test]
    fn thresholds() {
        let t = coco_iou_thresholds();
        assert_eq!(t.len(), 10);
        assert_eq!(t[0], 0.5);
        assert_eq!(t[9], 0.95);
    }

    #[test]
    fn ap_of_simple_rankings() {
        assert_eq!(interpolated_ap(&[true, true], 2), 1.0);
        assert_eq!(interpolated_ap(&[], 3), 0.0);
        // hit, miss, hit over 2 positives: precision 1 up to recall 0.5, then 2/3
        let ap = interpolated_ap(&[true, false, true], 2);
        assert!((ap - (51.0 + 50.0 * 2.0 / 3.0) / 101.0).abs() < 1e-12);
        // half recall reachable
        let ap = interpolated_ap(&[true], 2);
        assert!((ap - 51.0 / 101.0).abs() < 1e-12);
    }

    #[test]
    fn max_detections_cap() {
        let g = GtBox { image_id: 0, class_id: 0, bbox: Box2D::new(0.0, 0.0, 10.0, 10.0) };
        let mut dets: Vec<Detection> = (0..MAX_DETECTIONS)
            .map(|i| Detection { image_id: 0, class_id: 0, bbox: Box2D::new(500.0 + i as f64, 0.0, 1.0, 1.0), score: 0.9 })
            .collect();
        dets.push(Detection { image_id: 0, class_id: 0, bbox: g.bbox, score: 0.1 });
        let m = compute_map(&dets, &[g], &[0.5]);
        assert_eq!(m.per_class[0].1[0], 0.0);
    }
}
