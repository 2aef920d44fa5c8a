//! Pinhole camera model and box projection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::Box2D;
use crate::geometry::{cross, dot, norm, normalize, sub, Box3, Vec3, BOX_EDGES};

/// Points closer than this to the camera plane (mm) are clipped away.
pub const NEAR_PLANE_MM: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Intrinsics {
    pub focal_length_px: f64,
    pub principal_point: [f64; 2],
    pub width_px: u32,
    pub height_px: u32,
}

impl Intrinsics {
    /// Centered principal point, square pixels, given horizontal field of view.
    pub fn from_hfov(width_px: u32, height_px: u32, hfov_deg: f64) -> Self {
        let focal_length_px = 0.5 * width_px as f64 / (0.5 * hfov_deg.to_radians()).tan();
        Self {
            focal_length_px,
            principal_point: [0.5 * width_px as f64, 0.5 * height_px as f64],
            width_px,
            height_px,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraPose {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    /// Applied `[yaw, pitch, roll]` perturbation, degrees. Informational: the
    /// orientation is fully determined by `position`, `look_at` and `up`.
    pub rotation_noise_deg: [f64; 3],
    pub intrinsics: Intrinsics,
}

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("invalid camera: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionError {
    #[error("part is entirely behind the camera")]
    NotVisible,
}

/// Orthonormal camera frame: `right` (image +x), `down` (image +y), `forward`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraFrame {
    pub right: Vec3,
    pub down: Vec3,
    pub forward: Vec3,
}

impl CameraPose {
    pub fn validate(&self) -> Result<(), CameraError> {
        let bad = |m: &str| Err(CameraError::Invalid(m.to_string()));
        let k = &self.intrinsics;
        if k.width_px == 0 || k.height_px == 0 {
            return bad("image width and height must be positive");
        }
        if !(k.focal_length_px.is_finite() && k.focal_length_px > 0.0) {
            return bad("focal_length_px must be positive");
        }
        let finite = |v: &Vec3| v.iter().all(|x| x.is_finite());
        if !(finite(&self.position) && finite(&self.look_at) && finite(&self.up)) || !k.principal_point.iter().all(|x| x.is_finite()) {
            return bad("non-finite pose");
        }
        let view = sub(self.look_at, self.position);
        if !(norm(view) > 0.0) {
            return bad("look_at coincides with position");
        }
        let up_len = norm(self.up);
        if !(up_len > 0.0) || norm(cross(normalize(view), self.up)) / up_len < 1e-9 {
            return bad("up vector is degenerate with respect to the view direction");
        }
        Ok(())
    }

    pub fn frame(&self) -> CameraFrame {
        let forward = normalize(sub(self.look_at, self.position));
        let right = normalize(cross(forward, self.up));
        let down = cross(forward, right);
        CameraFrame { right, down, forward }
    }

    pub fn view_distance(&self) -> f64 {
        norm(sub(self.look_at, self.position))
    }

    /// World point to camera coordinates `[x right, y down, z forward]`.
    pub fn to_camera(&self, frame: &CameraFrame, p: Vec3) -> Vec3 {
        let rel = sub(p, self.position);
        [dot(rel, frame.right), dot(rel, frame.down), dot(rel, frame.forward)]
    }

    /// Pixel coordinates of a camera-space point with `z > 0`.
    pub fn pixel(&self, c: Vec3) -> [f64; 2] {
        let k = &self.intrinsics;
        [
            k.principal_point[0] + k.focal_length_px * c[0] / c[2],
            k.principal_point[1] + k.focal_length_px * c[1] / c[2],
        ]
    }

    /// Projects a world point; `None` when it is not in front of the near plane.
    pub fn project_point(&self, p: Vec3) -> Option<[f64; 2]> {
        let c = self.to_camera(&self.frame(), p);
        (c[2] >= NEAR_PLANE_MM).then(|| self.pixel(c))
    }

    /// 2D AABB of the projected box, before clipping to the image.
    ///
    /// Edges crossing the near plane are cut at it, so partially-behind boxes
    /// still produce a finite bound.
    pub fn project_box_unclipped(&self, b: &Box3) -> Result<Box2D, ProjectionError> {
        let frame = self.frame();
        let corners = b.corners().map(|p| self.to_camera(&frame, p));
        let (mut x1, mut y1, mut x2, mut y2) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut any = false;
        let mut include = |c: Vec3| {
            let [u, v] = self.pixel(c);
            x1 = x1.min(u);
            y1 = y1.min(v);
            x2 = x2.max(u);
            y2 = y2.max(v);
            any = true;
        };
        for (i, j) in BOX_EDGES {
            let (a, b) = (corners[i], corners[j]);
            let (ina, inb) = (a[2] >= NEAR_PLANE_MM, b[2] >= NEAR_PLANE_MM);
            if ina {
                include(a);
            }
            if inb {
                include(b);
            }
            if ina != inb {
                let t = (NEAR_PLANE_MM - a[2]) / (b[2] - a[2]);
                include([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), NEAR_PLANE_MM]);
            }
        }
        if !any || !(x1.is_finite() && y1.is_finite() && x2.is_finite() && y2.is_finite()) {
            return Err(ProjectionError::NotVisible);
        }
        Ok(Box2D::from_corners(x1, y1, x2, y2))
    }

    /// Projected AABB clipped to the image; zero-area when outside the frustum.
    pub fn project_box(&self, b: &Box3) -> Result<Box2D, ProjectionError> {
        let k = &self.intrinsics;
        Ok(self
            .project_box_unclipped(b)?
            .clip_to_image(k.width_px as f64, k.height_px as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn front_camera(distance: f64) -> CameraPose {
        CameraPose {
            position: [0.0, 0.0, distance],
            look_at: [0.0, 0.0, 0.0],
            up: [0.0, 1.0, 0.0],
            rotation_noise_deg: [0.0; 3],
            intrinsics: Intrinsics {
                focal_length_px: 512.0,
                principal_point: [512.0, 256.0],
                width_px: 1024,
                height_px: 512,
            },
        }
    }

    #[test]
    fn frame_axes() {
        let f = front_camera(100.0).frame();
        assert_eq!(f.right, [1.0, 0.0, 0.0]);
        assert_eq!(f.forward, [0.0, 0.0, -1.0]);
        assert_eq!(f.down, [0.0, -1.0, 0.0]);
    }

    #[test]
    fn hfov_focal() {
        let k = Intrinsics::from_hfov(1024, 512, 40.0);
        assert!((k.focal_length_px - 512.0 / 20f64.to_radians().tan()).abs() < 1e-9);
        assert_eq!(k.principal_point, [512.0, 256.0]);
    }

    #[test]
    fn behind_camera_is_not_visible() {
        let cam = front_camera(100.0);
        let b = Box3::new([-1.0, -1.0, 200.0], [1.0, 1.0, 210.0]);
        assert_eq!(cam.project_box(&b), Err(ProjectionError::NotVisible));
    }

    #[test]
    fn straddling_near_plane_is_finite() {
        let cam = front_camera(100.0);
        let b = Box3::new([-1.0, -1.0, 50.0], [1.0, 1.0, 150.0]);
        let p = cam.project_box(&b).unwrap();
        assert!(p.is_well_formed());
        assert_eq!(p, Box2D::new(0.0, 0.0, 1024.0, 512.0));
    }

    #[test]
    fn outside_frustum_is_empty() {
        let cam = front_camera(1000.0);
        let b = Box3::new([5000.0, -1.0, 0.0], [5100.0, 1.0, 1.0]);
        assert!(cam.project_box(&b).unwrap().is_empty());
    }

    #[test]
    fn validation() {
        let mut cam = front_camera(10.0);
        assert!(cam.validate().is_ok());
        cam.up = [0.0, 0.0, 1.0];
        assert!(cam.validate().is_err());
        let mut cam = front_camera(10.0);
        cam.intrinsics.width_px = 0;
        assert!(cam.validate().is_err());
        let mut cam = front_camera(10.0);
        cam.look_at = cam.position;
        assert!(cam.validate().is_err());
    }
}
