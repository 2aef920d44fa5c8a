//! Scenes rendered at known scales, labeled with the rescaling factor that
//! undoes the scale.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::CameraPose;
use crate::catalog::Catalog;
use crate::geometry::layout_strip;
use crate::rng::{derive_seed, CounterRng};
use crate::scenegen::{build_scene, reference_camera, sample_lighting, NoiseSigmas, SceneConfig, SceneError, SceneSpec};
use crate::stripgen::{generate_strip, GenerationParams};

pub const DEFAULT_SCALE_RANGE: [f64; 2] = [0.5, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleLabel {
    pub scene_id: u64,
    /// Rendered object size over nominal size.
    pub applied_scale: f64,
    /// Rescaling factor that restores nominal size: `1 / applied_scale`.
    pub label: f64,
}

#[derive(Debug, Error)]
pub enum ScaleLabelError {
    #[error("scale range must satisfy 0 < lo <= hi < inf, got [{0}, {1}]")]
    InvalidRange(f64, f64),
    #[error("count must be at least 1")]
    EmptyCount,
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Smallest `t >= s` whose reciprocal multiplies back to exactly 1.
pub fn exact_reciprocal_pair(s: f64) -> (f64, f64) {
    let mut t = s;
    loop {
        let l = 1.0 / t;
        if l * t == 1.0 {
            return (t, l);
        }
        t = t.next_up();
    }
}

/// Moves the camera along its line of sight so that objects on the plane
/// `z = front_z` appear `applied_scale` times larger. The pose must look
/// straight down the z axis.
pub fn scaled_camera(reference: &CameraPose, front_z: f64, applied_scale: f64) -> CameraPose {
    let mut cam = reference.clone();
    cam.position[2] = front_z + (reference.position[2] - front_z) / applied_scale;
    cam
}

/// `count` labeled scenes under `master_seed`.
///
/// Scene `i` uses the strip and lighting that corpus scene `i` would get,
/// the noise-free reference camera moved by [`scaled_camera`] relative to the
/// strip's front plane, and an applied scale drawn uniformly from
/// `scale_range` (nudged up by at most a few ulps so that
/// `label * applied_scale == 1` exactly).
pub fn generate_scale_labels(
    catalog: &Catalog,
    params: &GenerationParams,
    cfg: &SceneConfig,
    count: u64,
    scale_range: [f64; 2],
    master_seed: u64,
) -> Result<Vec<(ScaleLabel, SceneSpec)>, ScaleLabelError> {
    let [lo, hi] = scale_range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(ScaleLabelError::InvalidRange(lo, hi));
    }
    if count == 0 {
        return Err(ScaleLabelError::EmptyCount);
    }
    cfg.validate()?;
    (0..count)
        .map(|i| {
            let key = derive_seed(master_seed, i);
            let strip = generate_strip(catalog, &params.clone().with_seed(derive_seed(key, 0))).map_err(SceneError::from)?;
            let lighting = sample_lighting(cfg.hdri_count, &mut CounterRng::stream(key, 2))?;
            let drawn = CounterRng::stream(key, 3).uniform(lo, hi);
            let (applied_scale, label) = exact_reciprocal_pair(drawn);
            let reference = reference_camera(&strip, catalog, cfg)?;
            let front_z = layout_strip(&strip, catalog)
                .placement_bounds()
                .map(|b| b.max[2])
                .ok_or(SceneError::EmptyStrip)?;
            let camera = scaled_camera(&reference, front_z, applied_scale);
            let scene = build_scene(strip, camera, NoiseSigmas::ZERO, lighting, catalog, cfg, i, key)?;
            Ok((ScaleLabel { scene_id: i, applied_scale, label }, scene))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_is_exact() {
        for s in [2.0, 0.5, 1.7, 0.6180339887, 1.9999999] {
            let (t, l) = exact_reciprocal_pair(s);
            assert!(t >= s && t - s < 1e-12);
            assert_eq!(l * t, 1.0);
        }
        assert_eq!(exact_reciprocal_pair(2.0), (2.0, 0.5));
    }

    #[test]
    fn deterministic_and_in_range() {
        let c = Catalog::reference();
        let p = GenerationParams::default();
        let cfg = SceneConfig::default();
        let a = generate_scale_labels(&c, &p, &cfg, 5, [0.8, 1.2], 3).unwrap();
        let b = generate_scale_labels(&c, &p, &cfg, 5, [0.8, 1.2], 3).unwrap();
        assert_eq!(a, b);
        for (l, s) in &a {
            assert!(l.applied_scale >= 0.8 && l.applied_scale < 1.2 + 1e-12);
            assert_eq!(l.label * l.applied_scale, 1.0);
            assert_eq!(s.scene_id, l.scene_id);
        }
    }

    #[test]
    fn rejects_bad_ranges() {
        let c = Catalog::reference();
        let p = GenerationParams::default();
        let cfg = SceneConfig::default();
        assert!(generate_scale_labels(&c, &p, &cfg, 1, [0.0, 1.0], 0).is_err());
        assert!(generate_scale_labels(&c, &p, &cfg, 1, [2.0, 1.0], 0).is_err());
        assert!(generate_scale_labels(&c, &p, &cfg, 0, [1.0, 1.0], 0).is_err());
    }
}
