//! Viewpoint, lighting and background sampling; [`SceneSpec`] assembly.
//!
//! Each scene draws from three sub-streams of its scene key: `0` seeds the
//! strip generator, `1` the camera perturbation, `2` the lighting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{CameraError, CameraPose, Intrinsics};
use crate::catalog::Catalog;
use crate::geometry::{add, layout_strip, normalize, rotate, scale, sub, Vec3, MOUNTING_PLANE_Z};
use crate::rng::{derive_seed, CounterRng};
use crate::stripgen::{generate_strip, GenerationError, GenerationParams, StripConfig};

pub const SCENE_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_RESOLUTION: [u32; 2] = [1024, 512];
pub const DEFAULT_HDRI_COUNT: u32 = 46;

/// Placeholder HDRI manifest: ids and nominal file names, no assets.
pub const HDRI_MANIFEST_JSON: &str = include_str!("../data/hdri_manifest.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub hfov_deg: f64,
    /// Fraction of the image width the strip spans in the reference view.
    pub fill_fraction: f64,
    /// Per-axis position noise, as a fraction of the reference distance.
    pub sigma_position_rel: f64,
    /// Per-axis orientation noise, degrees.
    pub sigma_rotation_deg: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            hfov_deg: 40.0,
            fill_fraction: 0.8,
            sigma_position_rel: 0.03,
            sigma_rotation_deg: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub resolution: [u32; 2],
    pub camera: CameraConfig,
    pub hdri_count: u32,
    /// Background radii as multiples of the strip bounding radius.
    pub background_margin: f64,
    /// Per-axis stretch of the background on top of the margin; each >= 1.
    pub background_aspect: [f64; 3],
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            camera: CameraConfig::default(),
            hdri_count: DEFAULT_HDRI_COUNT,
            background_margin: 3.0,
            background_aspect: [1.5, 1.0, 1.0],
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: String| Err(SceneError::InvalidConfig(m));
        if self.resolution[0] == 0 || self.resolution[1] == 0 {
            return bad("resolution must be positive".into());
        }
        let c = &self.camera;
        if !(c.hfov_deg > 0.0 && c.hfov_deg < 180.0) {
            return bad(format!("hfov_deg {} outside (0, 180)", c.hfov_deg));
        }
        if !(c.fill_fraction > 0.0 && c.fill_fraction.is_finite()) {
            return bad("fill_fraction must be positive".into());
        }
        if !(c.sigma_position_rel >= 0.0 && c.sigma_position_rel.is_finite())
            || !(c.sigma_rotation_deg >= 0.0 && c.sigma_rotation_deg.is_finite())
        {
            return bad("noise sigmas must be finite and non-negative".into());
        }
        if self.hdri_count == 0 {
            return Err(SceneError::NoHdri);
        }
        if !(self.background_margin > 1.0 && self.background_margin.is_finite()) {
            return bad("background_margin must exceed 1".into());
        }
        if !self.background_aspect.iter().all(|a| *a >= 1.0 && a.is_finite()) {
            return bad("background_aspect entries must be >= 1".into());
        }
        Ok(())
    }

    pub fn intrinsics(&self) -> Intrinsics {
        Intrinsics::from_hfov(self.resolution[0], self.resolution[1], self.camera.hfov_deg)
    }
}

/// Standard deviations actually used for a scene's camera perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSigmas {
    pub position_mm: f64,
    pub rotation_deg: f64,
}

impl NoiseSigmas {
    pub const ZERO: NoiseSigmas = NoiseSigmas {
        position_mm: 0.0,
        rotation_deg: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightingEnv {
    pub hdri_id: u32,
    /// Rotation about the vertical axis, whole degrees in `[0, 360)`.
    pub rotation_deg: u32,
}

/// Semi-ellipsoid shadow catcher. Its flat side lies in the mounting plane
/// behind the rail; the HDRI used for lighting is mapped onto its surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSpec {
    pub radii_mm: [f64; 3],
    /// Center of the flat side.
    pub plane_origin_mm: Vec3,
    /// Normal of the flat side, pointing into the dome (towards the camera).
    pub plane_normal: Vec3,
    pub shadow_catcher: bool,
    pub hdri_id: u32,
    pub rotation_deg: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub schema_version: u32,
    pub scene_id: u64,
    pub seed: u64,
    pub resolution: [u32; 2],
    pub strip: StripConfig,
    pub camera: CameraPose,
    pub camera_noise: NoiseSigmas,
    pub lighting: LightingEnv,
    pub background: BackgroundSpec,
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("strip is empty")]
    EmptyStrip,
    #[error("hdri_count must be at least 1")]
    NoHdri,
    #[error("invalid scene configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error("scene parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scene: {0}")]
    Invalid(String),
}

/// Camera on the front normal through the strip center, looking at it, at a
/// distance where the strip length spans `fill_fraction` of the image width.
pub fn reference_camera(strip: &StripConfig, catalog: &Catalog, cfg: &SceneConfig) -> Result<CameraPose, SceneError> {
    if strip.placements.is_empty() || !(strip.total_length_mm > 0.0) {
        return Err(SceneError::EmptyStrip);
    }
    let layout = layout_strip(strip, catalog);
    let center = layout.center().ok_or(SceneError::EmptyStrip)?;
    let intrinsics = cfg.intrinsics();
    let distance = reference_distance(strip.total_length_mm, &intrinsics, cfg.camera.fill_fraction);
    Ok(CameraPose {
        position: add(center, [0.0, 0.0, distance]),
        look_at: center,
        up: [0.0, 1.0, 0.0],
        rotation_noise_deg: [0.0; 3],
        intrinsics,
    })
}

/// `f * L / (fill * W)`.
pub fn reference_distance(length_mm: f64, intrinsics: &Intrinsics, fill_fraction: f64) -> f64 {
    intrinsics.focal_length_px * length_mm / (fill_fraction * intrinsics.width_px as f64)
}

/// Gaussian perturbation of a reference pose.
///
/// Draw order: position noise `x, y, z`, then `yaw, pitch, roll`. Rotations
/// are applied about the camera's own axes in that order: yaw about `up`,
/// pitch about the yawed `right`, roll about the resulting `forward`. A
/// position that would land behind the mounting plane has its noise
/// reflected.
pub fn sample_camera(reference: &CameraPose, sigmas: NoiseSigmas, rng: &mut CounterRng) -> CameraPose {
    let d = [
        rng.normal(0.0, sigmas.position_mm),
        rng.normal(0.0, sigmas.position_mm),
        rng.normal(0.0, sigmas.position_mm),
    ];
    let angles_deg = [
        rng.normal(0.0, sigmas.rotation_deg),
        rng.normal(0.0, sigmas.rotation_deg),
        rng.normal(0.0, sigmas.rotation_deg),
    ];
    let mut position = add(reference.position, d);
    let mut shift = d;
    if position[2] <= MOUNTING_PLANE_Z {
        shift[2] = -d[2];
        position[2] = reference.position[2] + shift[2];
    }

    let frame = reference.frame();
    let up_axis = scale(frame.down, -1.0);
    let [yaw, pitch, roll] = angles_deg.map(f64::to_radians);
    let right1 = rotate(frame.right, up_axis, yaw);
    let forward1 = rotate(frame.forward, up_axis, yaw);
    let forward2 = rotate(forward1, right1, pitch);
    let apply = |v: Vec3| -> Vec3 {
        let v = rotate(v, up_axis, yaw);
        let v = rotate(v, right1, pitch);
        rotate(v, forward2, roll)
    };

    let offset = sub(reference.look_at, reference.position);
    let turned = apply(offset);
    CameraPose {
        position,
        look_at: add(add(reference.look_at, shift), sub(turned, offset)),
        up: apply(reference.up),
        rotation_noise_deg: angles_deg,
        intrinsics: reference.intrinsics,
    }
}

/// Uniform HDRI id and whole-degree rotation. Draw order: id, rotation.
pub fn sample_lighting(hdri_count: u32, rng: &mut CounterRng) -> Result<LightingEnv, SceneError> {
    if hdri_count == 0 {
        return Err(SceneError::NoHdri);
    }
    let hdri_id = rng.below(hdri_count as u64) as u32;
    let rotation_deg = rng.below(360) as u32;
    Ok(LightingEnv { hdri_id, rotation_deg })
}

/// Sizes the shadow catcher and assembles the scene description.
pub fn build_scene(
    strip: StripConfig,
    camera: CameraPose,
    camera_noise: NoiseSigmas,
    lighting: LightingEnv,
    catalog: &Catalog,
    cfg: &SceneConfig,
    scene_id: u64,
    seed: u64,
) -> Result<SceneSpec, SceneError> {
    camera.validate()?;
    let layout = layout_strip(&strip, catalog);
    let r = layout.bounding_radius();
    let center = layout.center().unwrap_or([0.0; 3]);
    let background = BackgroundSpec {
        radii_mm: cfg.background_aspect.map(|a| a * cfg.background_margin * r),
        plane_origin_mm: [center[0], center[1], MOUNTING_PLANE_Z],
        plane_normal: [0.0, 0.0, 1.0],
        shadow_catcher: true,
        hdri_id: lighting.hdri_id,
        rotation_deg: lighting.rotation_deg,
    };
    Ok(SceneSpec {
        schema_version: SCENE_SCHEMA_VERSION,
        scene_id,
        seed,
        resolution: [camera.intrinsics.width_px, camera.intrinsics.height_px],
        strip,
        camera,
        camera_noise,
        lighting,
        background,
    })
}

/// Scene `index` of a corpus under `master_seed`, fully determined by the pair.
pub fn generate_scene(
    catalog: &Catalog,
    params: &GenerationParams,
    cfg: &SceneConfig,
    master_seed: u64,
    index: u64,
) -> Result<SceneSpec, SceneError> {
    cfg.validate()?;
    let scene_key = derive_seed(master_seed, index);
    let strip = generate_strip(catalog, &params.clone().with_seed(derive_seed(scene_key, 0)))?;
    let reference = reference_camera(&strip, catalog, cfg)?;
    let sigmas = NoiseSigmas {
        position_mm: cfg.camera.sigma_position_rel * reference.view_distance(),
        rotation_deg: cfg.camera.sigma_rotation_deg,
    };
    let camera = sample_camera(&reference, sigmas, &mut CounterRng::stream(scene_key, 1));
    let lighting = sample_lighting(cfg.hdri_count, &mut CounterRng::stream(scene_key, 2))?;
    build_scene(strip, camera, sigmas, lighting, catalog, cfg, index, scene_key)
}

impl SceneSpec {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    /// Parses and checks structural consistency.
    pub fn from_json_slice(bytes: &[u8]) -> Result<SceneSpec, SceneError> {
        let scene: SceneSpec = serde_json::from_slice(bytes)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: String| Err(SceneError::Invalid(m));
        if self.schema_version != SCENE_SCHEMA_VERSION {
            return bad(format!("unsupported schema_version {}", self.schema_version));
        }
        self.camera.validate()?;
        if self.resolution != [self.camera.intrinsics.width_px, self.camera.intrinsics.height_px] {
            return bad("resolution disagrees with camera intrinsics".into());
        }
        if self.lighting.rotation_deg >= 360 || self.background.rotation_deg >= 360 {
            return bad("rotation_deg outside [0, 360)".into());
        }
        if self.lighting.hdri_id != self.background.hdri_id || self.lighting.rotation_deg != self.background.rotation_deg {
            return bad("background must reuse the lighting HDRI and rotation".into());
        }
        if !self.background.radii_mm.iter().all(|r| r.is_finite() && *r > 0.0) {
            return bad("background radii must be positive".into());
        }
        let p = &self.strip.placements;
        let mut prev_right = f64::NEG_INFINITY;
        for (i, part) in p.iter().enumerate() {
            if !part.size_mm.iter().all(|v| v.is_finite() && *v > 0.0) || !part.rail_offset_mm.is_finite() {
                return bad(format!("placement {i} has invalid geometry"));
            }
            if part.rail_offset_mm + 1e-9 < prev_right {
                return bad(format!("placement {i} overlaps its predecessor"));
            }
            prev_right = part.right_edge_mm();
            for a in &part.attachments {
                if let crate::stripgen::Attachment::Bridge { first, last, .. } = a {
                    if *first != i || *last < *first || *last >= p.len() {
                        return bad(format!("placement {i} has an out-of-range bridge"));
                    }
                }
            }
        }
        if !p.is_empty() && (self.strip.total_length_mm - prev_right).abs() > 1e-6 {
            return bad("total_length_mm disagrees with placements".into());
        }
        if self.camera.position[2] <= MOUNTING_PLANE_Z {
            return bad("camera behind the mounting plane".into());
        }
        Ok(())
    }
}

/// Normalized view direction of a pose, for tests and diagnostics.
pub fn view_direction(pose: &CameraPose) -> Vec3 {
    normalize(sub(pose.look_at, pose.position))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::norm;

    fn strip(seed: u64) -> StripConfig {
        generate_strip(&Catalog::reference(), &GenerationParams::default().with_seed(seed)).unwrap()
    }

    #[test]
    fn reference_distance_formula() {
        let c = Catalog::reference();
        let cfg = SceneConfig::default();
        let s = strip(1);
        let cam = reference_camera(&s, &c, &cfg).unwrap();
        let f = cfg.intrinsics().focal_length_px;
        let expected = f * s.total_length_mm / (0.8 * 1024.0);
        assert!((cam.view_distance() - expected).abs() < 1e-9 * expected);
        assert_eq!(cam.rotation_noise_deg, [0.0; 3]);
    }

    #[test]
    fn distance_is_linear_in_length() {
        let k = SceneConfig::default().intrinsics();
        let d1 = reference_distance(100.0, &k, 0.8);
        let d2 = reference_distance(200.0, &k, 0.8);
        assert!((d2 - 2.0 * d1).abs() < 1e-9);
    }

    #[test]
    fn empty_strip_rejected() {
        let mut s = strip(1);
        s.placements.clear();
        s.total_length_mm = 0.0;
        assert!(matches!(
            reference_camera(&s, &Catalog::reference(), &SceneConfig::default()),
            Err(SceneError::EmptyStrip)
        ));
    }

    #[test]
    fn zero_noise_is_identity() {
        let cam = reference_camera(&strip(2), &Catalog::reference(), &SceneConfig::default()).unwrap();
        let mut rng = CounterRng::new(3);
        let out = sample_camera(&cam, NoiseSigmas::ZERO, &mut rng);
        assert_eq!(out, cam);
    }

    #[test]
    fn perturbed_pose_is_consistent() {
        let cam = reference_camera(&strip(2), &Catalog::reference(), &SceneConfig::default()).unwrap();
        let mut rng = CounterRng::new(4);
        let sig = NoiseSigmas { position_mm: 10.0, rotation_deg: 5.0 };
        for _ in 0..1000 {
            let out = sample_camera(&cam, sig, &mut rng);
            assert!((out.view_distance() - cam.view_distance()).abs() < 1e-6);
            assert!((norm(out.up) - 1.0).abs() < 1e-9);
            assert!(out.validate().is_ok());
            assert!(out.position[2] > MOUNTING_PLANE_Z);
        }
    }

    #[test]
    fn lighting_bounds() {
        let mut rng = CounterRng::new(1);
        for _ in 0..10_000 {
            let l = sample_lighting(46, &mut rng).unwrap();
            assert!(l.hdri_id < 46 && l.rotation_deg < 360);
        }
        assert!((0..100).all(|_| sample_lighting(1, &mut rng).unwrap().hdri_id == 0));
        assert!(matches!(sample_lighting(0, &mut rng), Err(SceneError::NoHdri)));
    }

    #[test]
    fn background_shares_lighting_and_encloses_strip() {
        let c = Catalog::reference();
        let cfg = SceneConfig::default();
        let scene = generate_scene(&c, &GenerationParams::default(), &cfg, 7, 0).unwrap();
        assert_eq!(scene.background.hdri_id, scene.lighting.hdri_id);
        assert_eq!(scene.background.rotation_deg, scene.lighting.rotation_deg);
        let r = layout_strip(&scene.strip, &c).bounding_radius();
        for radius in scene.background.radii_mm {
            assert!(radius >= 3.0 * r - 1e-9);
        }
        assert!(scene.validate().is_ok());
    }

    #[test]
    fn scene_round_trip_and_determinism() {
        let c = Catalog::reference();
        let cfg = SceneConfig::default();
        let a = generate_scene(&c, &GenerationParams::default(), &cfg, 11, 4).unwrap();
        let b = generate_scene(&c, &GenerationParams::default(), &cfg, 11, 4).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
        let back = SceneSpec::from_json_slice(a.to_json_string().as_bytes()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn hdri_manifest_has_46_entries() {
        let v: serde_json::Value = serde_json::from_str(HDRI_MANIFEST_JSON).unwrap();
        assert_eq!(v["hdris"].as_array().unwrap().len(), 46);
    }
}
