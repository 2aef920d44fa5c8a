use std::cmp::Ordering;

use super::{iou, Detection, GtBox};

/// Descending score, then ascending image id, then input position.
pub fn canonical_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&i, &j| by_score(&dets[i], &dets[j]).then(i.cmp(&j)));
    order
}

pub(crate) fn by_score(a: &Detection, b: &Detection) -> Ordering {
    b.score.total_cmp(&a.score).then(a.image_id.cmp(&b.image_id))
}

/// Greedy matching of detections (already in priority order) to ground truth
/// of one image.
///
/// Each detection takes the unmatched ground-truth box with the largest IoU
/// at or above `iou_threshold`; equal IoU goes to the lower index. With
/// `class_aware` only boxes of the detection's class are candidates.
pub fn greedy_match(dets: &[&Detection], gts: &[&GtBox], iou_threshold: f64, class_aware: bool) -> Vec<Option<usize>> {
    let mut taken = vec![false; gts.len()];
    dets.iter()
        .map(|d| {
            let mut best: Option<(usize, f64)> = None;
            for (g, gt) in gts.iter().enumerate() {
                if taken[g] || (class_aware && gt.class_id != d.class_id) {
                    continue;
                }
                let v = iou(&d.bbox, &gt.bbox);
                if v >= iou_threshold && best.is_none_or(|(_, b)| v > b) {
                    best = Some((g, v));
                }
            }
            best.map(|(g, _)| {
                taken[g] = true;
                g
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbox::Box2D;

    #[test]
    fn equal_iou_prefers_lower_index() {
        let g0 = GtBox { image_id: 0, class_id: 0, bbox: Box2D::new(0.0, 0.0, 10.0, 10.0) };
        let g1 = GtBox { image_id: 0, class_id: 0, bbox: Box2D::new(10.0, 0.0, 10.0, 10.0) };
        let d = Detection { image_id: 0, class_id: 0, bbox: Box2D::new(5.0, 0.0, 10.0, 10.0), score: 1.0 };
        assert_eq!(greedy_match(&[&d], &[&g0, &g1], 0.3, true), vec![Some(0)]);
        assert_eq!(greedy_match(&[&d, &d], &[&g0, &g1], 0.3, true), vec![Some(0), Some(1)]);
    }

    #[test]
    fn class_awareness() {
        let g = GtBox { image_id: 0, class_id: 1, bbox: Box2D::new(0.0, 0.0, 10.0, 10.0) };
        let d = Detection { image_id: 0, class_id: 0, bbox: g.bbox, score: 1.0 };
        assert_eq!(greedy_match(&[&d], &[&g], 0.5, true), vec![None]);
        assert_eq!(greedy_match(&[&d], &[&g], 0.5, false), vec![Some(0)]);
    }
}
