//! COCO results files: a JSON array of
//! `{image_id, category_id, bbox: [x, y, w, h], score}` with 1-based
//! category ids.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Detection, GtBox};
use crate::bbox::Box2D;
use crate::coco::CocoDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoResult {
    pub image_id: u64,
    pub category_id: u32,
    pub bbox: [f64; 4],
    pub score: f64,
}

#[derive(Debug, Error)]
pub enum DetectionsError {
    #[error("detections parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("detection {index}: {message}")]
    Invalid { index: usize, message: String },
}

/// Parses and validates a results array; category ids become 0-based.
pub fn parse_detections(bytes: &[u8]) -> Result<Vec<Detection>, DetectionsError> {
    let raw: Vec<CocoResult> = serde_json::from_slice(bytes)?;
    raw.into_iter()
        .enumerate()
        .map(|(index, r)| {
            let bad = |message: &str| DetectionsError::Invalid { index, message: message.to_string() };
            if r.category_id == 0 {
                return Err(bad("category_id must be at least 1"));
            }
            let d = Detection {
                image_id: r.image_id,
                class_id: r.category_id - 1,
                bbox: Box2D::from_xywh(r.bbox),
                score: r.score,
            };
            if !(0.0..=1.0).contains(&d.score) {
                return Err(bad("score must lie in [0, 1]"));
            }
            if !d.bbox.is_well_formed() {
                return Err(bad("bbox must be finite with non-negative size"));
            }
            Ok(d)
        })
        .collect()
}

pub fn detections_to_json(dets: &[Detection]) -> String {
    let raw: Vec<CocoResult> = dets
        .iter()
        .map(|d| CocoResult {
            image_id: d.image_id,
            category_id: d.class_id + 1,
            bbox: d.bbox.to_xywh(),
            score: d.score,
        })
        .collect();
    serde_json::to_string(&raw).expect("detections serialize")
}

/// Flat ground truth of a COCO dataset with 0-based classes.
pub fn gt_boxes(ds: &CocoDataset) -> Vec<GtBox> {
    ds.annotations
        .iter()
        .map(|a| GtBox {
            image_id: a.image_id,
            class_id: a.category_id.saturating_sub(1),
            bbox: Box2D::from_xywh(a.bbox),
        })
        .collect()
}
