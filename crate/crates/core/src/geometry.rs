//! World-frame layout of a strip.
//!
//! World axes: `x` along the rail, `y` up, `z` out of the mounting plane
//! towards the viewer. The mounting plane is `z = 0`; the rail sits on it
//! and parts sit on the rail. The strip is centered on `x = 0` and the rail
//! centerline is `y = 0`. Units are millimeters.

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, PartKind};
use crate::stripgen::{Attachment, StripConfig};

pub type Vec3 = [f64; 3];

pub const MOUNTING_PLANE_Z: f64 = 0.0;
/// Rail depth used when the catalog has no DIN rail entry.
pub const DEFAULT_RAIL_DEPTH_MM: f64 = 7.5;
const DEFAULT_RAIL_HEIGHT_MM: f64 = 35.0;
/// Rail overhang beyond the outermost parts, per side.
const RAIL_OVERHANG_MM: f64 = 5.0;

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}
pub fn normalize(a: Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

/// Rotates `v` by `angle` radians about the unit axis `k` (Rodrigues).
pub fn rotate(v: Vec3, k: Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    add(add(scale(v, c), scale(cross(k, v), s)), scale(k, dot(k, v) * (1.0 - c)))
}

/// World-axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    pub min: Vec3,
    pub max: Vec3,
}

impl Box3 {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn center(&self) -> Vec3 {
        scale(add(self.min, self.max), 0.5)
    }

    pub fn front_center(&self) -> Vec3 {
        let c = self.center();
        [c[0], c[1], self.max[2]]
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min, self.max);
        [
            [a[0], a[1], a[2]],
            [b[0], a[1], a[2]],
            [b[0], b[1], a[2]],
            [a[0], b[1], a[2]],
            [a[0], a[1], b[2]],
            [b[0], a[1], b[2]],
            [b[0], b[1], b[2]],
            [a[0], b[1], b[2]],
        ]
    }

    pub fn union(&self, other: &Box3) -> Box3 {
        let mut out = *self;
        for i in 0..3 {
            out.min[i] = out.min[i].min(other.min[i]);
            out.max[i] = out.max[i].max(other.max[i]);
        }
        out
    }

    pub fn extent(&self) -> Vec3 {
        sub(self.max, self.min)
    }
}

/// Index pairs of the 12 edges of [`Box3::corners`].
pub const BOX_EDGES: [(usize, usize); 12] = [
    (0, 1), (1, 2), (2, 3), (3, 0),
    (4, 5), (5, 6), (6, 7), (7, 4),
    (0, 4), (1, 5), (2, 6), (3, 7),
];

/// What a laid-out box represents.
#[derive(Debug, Clone, PartialEq)]
pub struct PartBox {
    pub kind: PartKind,
    pub part_id: String,
    pub class_id: Option<u32>,
    /// Index into `StripConfig::placements` (the host part for attachments).
    pub placement: Option<usize>,
    /// Index into the host's `attachments`.
    pub attachment: Option<usize>,
    pub rgb: [f64; 3],
    pub bounds: Box3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripLayout {
    pub rail: PartBox,
    /// Rail-mounted placements, in placement order.
    pub placements: Vec<PartBox>,
    /// Markings, bridges and adapters in placement-then-attachment order.
    pub attachments: Vec<PartBox>,
}

impl StripLayout {
    /// Bounding box of the rail-mounted placements (rail and attachments excluded).
    pub fn placement_bounds(&self) -> Option<Box3> {
        self.placements.iter().map(|p| p.bounds).reduce(|a, b| a.union(&b))
    }

    /// Bounding box of everything, rail included.
    pub fn bounds(&self) -> Box3 {
        self.placements
            .iter()
            .chain(&self.attachments)
            .fold(self.rail.bounds, |acc, p| acc.union(&p.bounds))
    }

    /// Center of [`Self::placement_bounds`], the camera's aim point.
    pub fn center(&self) -> Option<Vec3> {
        self.placement_bounds().map(|b| b.center())
    }

    /// Largest distance from [`Self::center`] to a corner of [`Self::bounds`].
    pub fn bounding_radius(&self) -> f64 {
        let Some(c) = self.center() else { return 0.0 };
        self.bounds()
            .corners()
            .iter()
            .map(|p| norm(sub(*p, c)))
            .fold(0.0, f64::max)
    }

    /// Rail, then placements, then attachments.
    pub fn all(&self) -> impl Iterator<Item = &PartBox> {
        std::iter::once(&self.rail).chain(&self.placements).chain(&self.attachments)
    }
}

/// Lays the strip out in world coordinates.
///
/// Accessory geometry comes from the first catalog entry of each kind; parts
/// unknown to the catalog fall back to nominal sizes so foreign scene files
/// still lay out.
pub fn layout_strip(strip: &StripConfig, catalog: &Catalog) -> StripLayout {
    let rail_spec = catalog.first_of(PartKind::DinRail);
    let rail_depth = rail_spec.map(|r| r.depth_mm).unwrap_or(DEFAULT_RAIL_DEPTH_MM);
    let rail_height = rail_spec.map(|r| r.height_mm).unwrap_or(DEFAULT_RAIL_HEIGHT_MM);
    let x0 = -0.5 * strip.total_length_mm;
    let steel = catalog.color("steel").map(|m| m.rgb).unwrap_or([0.7, 0.7, 0.72]);

    let rail = PartBox {
        kind: PartKind::DinRail,
        part_id: rail_spec.map(|r| r.part_id.clone()).unwrap_or_else(|| "din-rail".into()),
        class_id: None,
        placement: None,
        attachment: None,
        rgb: steel,
        bounds: Box3::new(
            [x0 - RAIL_OVERHANG_MM, -0.5 * rail_height, MOUNTING_PLANE_Z],
            [-x0 + RAIL_OVERHANG_MM, 0.5 * rail_height, MOUNTING_PLANE_Z + rail_depth],
        ),
    };

    let placements: Vec<PartBox> = strip
        .placements
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let [w, h, d] = p.size_mm;
            let left = x0 + p.rail_offset_mm;
            PartBox {
                kind: p.kind,
                part_id: p.part_id.clone(),
                class_id: catalog.part(&p.part_id).and_then(|s| s.class_id),
                placement: Some(i),
                attachment: None,
                rgb: p.material.rgb,
                bounds: Box3::new(
                    [left, -0.5 * h, MOUNTING_PLANE_Z + rail_depth],
                    [left + w, 0.5 * h, MOUNTING_PLANE_Z + rail_depth + d],
                ),
            }
        })
        .collect();

    let marking = catalog.first_of(PartKind::Marking);
    let bridge = catalog.first_of(PartKind::PlugInBridge);
    let adapter = catalog.first_of(PartKind::TestAdapter);
    let color = |name: &str| catalog.color(name).map(|m| m.rgb).unwrap_or([1.0, 0.0, 1.0]);

    let mut attachments = Vec::new();
    for (i, p) in strip.placements.iter().enumerate() {
        let host = &placements[i].bounds;
        let host_center = host.center();
        let front = host.max[2];
        let spec = catalog.part(&p.part_id);
        let shaft_pos = |spec: Option<&crate::catalog::PartSpec>, level: u32| -> [f64; 2] {
            spec.and_then(|s| s.shafts.iter().find(|sh| sh.shaft_index == level))
                .map(|sh| sh.position_mm)
                .unwrap_or([0.0, 0.0])
        };
        for (k, a) in p.attachments.iter().enumerate() {
            let (kind, part_id, rgb, bounds) = match a {
                Attachment::Marking { point } => {
                    let (mw, mh, md) = marking.map(|m| (m.width_mm, m.height_mm, m.depth_mm)).unwrap_or((4.5, 9.0, 1.0));
                    let points = spec.map(|s| s.marking_points).unwrap_or(1).max(1);
                    let h = host.extent()[1];
                    let yc = host.max[1] - h * (*point as f64 + 1.0) / (points as f64 + 1.0);
                    let mw = mw.min(host.extent()[0]);
                    (
                        PartKind::Marking,
                        marking.map(|m| m.part_id.clone()).unwrap_or_else(|| "marking".into()),
                        color("white"),
                        Box3::new(
                            [host_center[0] - 0.5 * mw, yc - 0.5 * mh, front],
                            [host_center[0] + 0.5 * mw, yc + 0.5 * mh, front + md],
                        ),
                    )
                }
                Attachment::Bridge { level, first, last, color: c } => {
                    let (bw, bh, bd) = bridge.map(|b| (b.width_mm, b.height_mm, b.depth_mm)).unwrap_or((3.0, 4.0, 10.0));
                    let last = (*last).min(placements.len() - 1);
                    let first = (*first).min(last);
                    let first_pos = shaft_pos(catalog.part(&strip.placements[first].part_id), *level);
                    let last_pos = shaft_pos(catalog.part(&strip.placements[last].part_id), *level);
                    let xa = placements[first].bounds.center()[0] + first_pos[0];
                    let xb = placements[last].bounds.center()[0] + last_pos[0];
                    let y = 0.5 * (first_pos[1] + last_pos[1]);
                    let zf = placements[first..=last].iter().map(|b| b.bounds.max[2]).fold(f64::MIN, f64::max);
                    (
                        PartKind::PlugInBridge,
                        bridge.map(|b| b.part_id.clone()).unwrap_or_else(|| "plug-in-bridge".into()),
                        color(c),
                        Box3::new(
                            [xa.min(xb) - 0.5 * bw, y - 0.5 * bh, zf - 0.8 * bd],
                            [xa.max(xb) + 0.5 * bw, y + 0.5 * bh, zf + 0.2 * bd],
                        ),
                    )
                }
                Attachment::TestAdapter { shaft, color: c } => {
                    let (aw, ah, ad) = adapter.map(|b| (b.width_mm, b.height_mm, b.depth_mm)).unwrap_or((3.5, 5.5, 16.0));
                    let pos = shaft_pos(spec, *shaft);
                    let x = host_center[0] + pos[0];
                    (
                        PartKind::TestAdapter,
                        adapter.map(|b| b.part_id.clone()).unwrap_or_else(|| "test-adapter".into()),
                        color(c),
                        Box3::new(
                            [x - 0.5 * aw, pos[1] - 0.5 * ah, front],
                            [x + 0.5 * aw, pos[1] + 0.5 * ah, front + ad],
                        ),
                    )
                }
            };
            attachments.push(PartBox {
                kind,
                class_id: catalog.part(&part_id).and_then(|s| s.class_id),
                part_id,
                placement: Some(i),
                attachment: Some(k),
                rgb,
                bounds,
            });
        }
    }

    StripLayout {
        rail,
        placements,
        attachments,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stripgen::{generate_strip, GenerationParams};

    #[test]
    fn rotation_preserves_length_and_zero_is_identity() {
        let v = [1.0, 2.0, 3.0];
        let k = normalize([0.3, -0.2, 0.9]);
        let r = rotate(v, k, 0.7);
        assert!((norm(r) - norm(v)).abs() < 1e-12);
        assert_eq!(rotate(v, k, 0.0), v);
        let q = rotate([1.0, 0.0, 0.0], [0.0, 0.0, 1.0], std::f64::consts::FRAC_PI_2);
        assert!((q[0]).abs() < 1e-15 && (q[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn layout_is_centered_and_ordered() {
        let c = Catalog::reference();
        let s = generate_strip(&c, &GenerationParams::default().with_seed(5)).unwrap();
        let l = layout_strip(&s, &c);
        let b = l.placement_bounds().unwrap();
        assert!((b.min[0] + b.max[0]).abs() < 1e-9);
        assert!((b.extent()[0] - s.total_length_mm).abs() < 1e-9);
        for w in l.placements.windows(2) {
            assert!(w[0].bounds.max[0] <= w[1].bounds.min[0] + 1e-9);
        }
        for p in &l.placements {
            assert!(p.bounds.min[2] >= DEFAULT_RAIL_DEPTH_MM - 1e-12);
        }
        assert!(l.bounding_radius() > 0.5 * s.total_length_mm);
    }
}
