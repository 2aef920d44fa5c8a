//! Constant-factor rescaling. Resizing an image by `f` maps every box field
//! `x, y, w, h` to `f` times itself.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::Box2D;
use crate::coco::CocoDataset;
use crate::evalkit::Detection;

#[derive(Debug, Error, PartialEq)]
pub enum RescaleError {
    #[error("rescale factor must be positive and finite, got {0}")]
    BadFactor(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaleEntry {
    pub image: String,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaleManifest {
    pub factor: f64,
    pub entries: Vec<RescaleEntry>,
}

fn check(factor: f64) -> Result<(), RescaleError> {
    if factor.is_finite() && factor > 0.0 {
        Ok(())
    } else {
        Err(RescaleError::BadFactor(factor))
    }
}

/// Pairs every image with `factor`.
pub fn constant_rescale(images: &[String], factor: f64) -> Result<RescaleManifest, RescaleError> {
    check(factor)?;
    Ok(RescaleManifest {
        factor,
        entries: images
            .iter()
            .map(|image| RescaleEntry { image: image.clone(), factor })
            .collect(),
    })
}

pub fn scale_box(b: &Box2D, factor: f64) -> Box2D {
    b.scaled(factor)
}

pub fn scale_detections(dets: &[Detection], factor: f64) -> Result<Vec<Detection>, RescaleError> {
    check(factor)?;
    Ok(dets
        .iter()
        .map(|d| Detection { bbox: scale_box(&d.bbox, factor), ..*d })
        .collect())
}

/// Ground truth of the resized images; sizes round to whole pixels.
pub fn scale_coco(ds: &CocoDataset, factor: f64) -> Result<CocoDataset, RescaleError> {
    check(factor)?;
    let mut out = ds.clone();
    for img in &mut out.images {
        img.width = (img.width as f64 * factor).round() as u32;
        img.height = (img.height as f64 * factor).round() as u32;
    }
    for a in &mut out.annotations {
        a.bbox = scale_box(&Box2D::from_xywh(a.bbox), factor).to_xywh();
        a.area *= factor * factor;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_arithmetic() {
        assert_eq!(scale_box(&Box2D::new(10.0, 10.0, 20.0, 40.0), 1.5), Box2D::new(15.0, 15.0, 30.0, 60.0));
        let b = Box2D::new(1.25, 2.0, 3.0, 4.5);
        assert_eq!(scale_box(&b, 1.0), b);
    }

    #[test]
    fn manifest() {
        let imgs = vec!["a.png".to_string(), "b.png".to_string()];
        let m = constant_rescale(&imgs, 1.5).unwrap();
        assert!(m.entries.iter().all(|e| e.factor == 1.5));
        assert_eq!(m.entries.len(), 2);
        assert_eq!(constant_rescale(&imgs, 0.0), Err(RescaleError::BadFactor(0.0)));
        assert!(constant_rescale(&imgs, -1.0).is_err());
    }
}
