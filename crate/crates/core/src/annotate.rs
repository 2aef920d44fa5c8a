//! Analytic ground truth: projected part boxes, terminal-block overlap
//! clipping and per-scene annotation sets.

use serde::{Deserialize, Serialize};

use crate::bbox::Box2D;
use crate::camera::{CameraPose, ProjectionError};
use crate::catalog::{Catalog, PartKind};
use crate::geometry::{layout_strip, PartBox};
use crate::scenegen::SceneSpec;

/// Allowed overlap of adjacent terminal-block boxes, as a fraction of the
/// thinner component's width.
pub const MAX_BLOCK_OVERLAP_FRACTION: f64 = 0.2;
/// Overlaps within this many pixels of the cap are left alone.
pub const CLIP_EPSILON_PX: f64 = 1e-9;
pub const DEFAULT_MIN_AREA_PX: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotateConfig {
    pub min_area_px: f64,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        Self {
            min_area_px: DEFAULT_MIN_AREA_PX,
        }
    }
}

/// Where an annotation came from in the strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceRef {
    pub placement: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attachment: Option<usize>,
}

/// Horizontal footprint of the component before overlap clipping: its
/// projected width and the column of its projected front-face center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentExtent {
    pub width_px: f64,
    pub center_x_px: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthObject {
    pub class_id: u32,
    pub kind: PartKind,
    pub bbox: Box2D,
    pub source: SourceRef,
    pub clipped: bool,
    pub extent: ComponentExtent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationSet {
    pub scene_id: u64,
    pub image_width: u32,
    pub image_height: u32,
    pub objects: Vec<GroundTruthObject>,
    /// Annotated parts dropped as invisible or below the area threshold.
    #[serde(default)]
    pub omitted: u32,
}

impl AnnotationSet {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("annotations serialize")
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<AnnotationSet, serde_json::Error> {
        serde_json::from_slice(bytes)
    }
}

/// Image-clipped 2D box of one laid-out part.
pub fn project_part(part: &PartBox, camera: &CameraPose) -> Result<Box2D, ProjectionError> {
    camera.project_box(&part.bounds)
}

/// Horizontal interval of one terminal-block box as seen by the clipper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipSpan {
    pub left: f64,
    pub right: f64,
    /// Width of the unclipped component; the cap is computed from it.
    pub component_width: f64,
    /// Column each box must keep covering.
    pub anchor: f64,
}

impl ClipSpan {
    /// Span of a fresh box: its own width and center.
    pub fn fresh(left: f64, right: f64) -> Self {
        Self {
            left,
            right,
            component_width: right - left,
            anchor: 0.5 * (left + right),
        }
    }
}

/// Limits the overlap of each adjacent pair to `0.2 * min(component widths)`.
///
/// Each pair's excess is removed half from the left box's right edge and
/// half from the right box's left edge. An edge never moves past its box's
/// anchor; whatever one side cannot absorb goes to the other. All pairs are
/// resolved from the input spans, so the result does not depend on the order
/// pairs are visited in.
pub fn clip_spans(spans: &[ClipSpan]) -> Vec<ClipSpan> {
    let mut out = spans.to_vec();
    for i in 1..spans.len() {
        let (l, r) = (&spans[i - 1], &spans[i]);
        let overlap = l.right - r.left;
        let allowed = MAX_BLOCK_OVERLAP_FRACTION * l.component_width.min(r.component_width);
        if !(overlap > allowed + CLIP_EPSILON_PX) {
            continue;
        }
        let excess = overlap - allowed;
        let cap_left = (l.right - l.anchor).max(0.0);
        let cap_right = (r.anchor - r.left).max(0.0);
        let mut trim_left = 0.5 * excess;
        let mut trim_right = 0.5 * excess;
        if trim_left > cap_left {
            trim_right += trim_left - cap_left;
            trim_left = cap_left;
        }
        if trim_right > cap_right {
            trim_left = (trim_left + trim_right - cap_right).min(cap_left);
            trim_right = cap_right;
        }
        out[i - 1].right = l.right - trim_left;
        out[i].left = r.left + trim_right;
    }
    out
}

/// Applies [`clip_spans`] to the terminal-block objects of a set, in order.
/// Other objects pass through.
pub fn clip_overlaps(objects: &mut [GroundTruthObject]) {
    let blocks: Vec<usize> = (0..objects.len())
        .filter(|&i| objects[i].kind == PartKind::TerminalBlock)
        .collect();
    let spans: Vec<ClipSpan> = blocks
        .iter()
        .map(|&i| {
            let o = &objects[i];
            ClipSpan {
                left: o.bbox.x,
                right: o.bbox.x2(),
                component_width: o.extent.width_px,
                anchor: o.extent.center_x_px,
            }
        })
        .collect();
    for (k, s) in clip_spans(&spans).into_iter().enumerate() {
        let o = &mut objects[blocks[k]];
        if s.left != spans[k].left || s.right != spans[k].right {
            o.bbox.x = s.left;
            o.bbox.w = (s.right - s.left).max(0.0);
            o.clipped = true;
        }
    }
}

/// Ground truth for one scene.
///
/// Every annotated part (blocks, covers, clamps, bridges, adapters) is
/// projected; parts behind the camera are omitted, terminal-block overlaps
/// are clipped, and boxes smaller than `min_area_px` are dropped.
pub fn annotate_scene(scene: &SceneSpec, catalog: &Catalog, cfg: &AnnotateConfig) -> AnnotationSet {
    let layout = layout_strip(&scene.strip, catalog);
    let camera = &scene.camera;
    let frame = camera.frame();
    let (w, h) = (camera.intrinsics.width_px as f64, camera.intrinsics.height_px as f64);
    let mut objects = Vec::new();
    let mut omitted = 0u32;
    for part in layout.placements.iter().chain(&layout.attachments) {
        if !part.kind.is_annotated() {
            continue;
        }
        let Some(class_id) = part.class_id else {
            log::warn!("part `{}` has no class in the catalog; skipped", part.part_id);
            omitted += 1;
            continue;
        };
        let bbox = match project_part(part, camera) {
            Ok(b) => b,
            Err(e) => {
                log::debug!("scene {}: part `{}` omitted: {e}", scene.scene_id, part.part_id);
                omitted += 1;
                continue;
            }
        };
        let front = camera.to_camera(&frame, part.bounds.front_center());
        let center_x = Some(front)
            .filter(|c| c[2] > 0.0)
            .map(|c| camera.pixel(c)[0])
            .filter(|x| x.is_finite())
            .unwrap_or(bbox.center()[0]);
        objects.push(GroundTruthObject {
            class_id,
            kind: part.kind,
            bbox,
            source: SourceRef {
                placement: part.placement.unwrap_or(0),
                attachment: part.attachment,
            },
            clipped: false,
            extent: ComponentExtent {
                width_px: bbox.w,
                center_x_px: center_x.clamp(bbox.x, bbox.x2()),
            },
        });
    }
    clip_overlaps(&mut objects);
    let before = objects.len();
    objects.retain(|o| o.bbox.area() >= cfg.min_area_px && !o.bbox.is_empty());
    omitted += (before - objects.len()) as u32;
    debug_assert!(objects.iter().all(|o| o.bbox.x >= 0.0 && o.bbox.x2() <= w + 1e-9 && o.bbox.y2() <= h + 1e-9));
    AnnotationSet {
        scene_id: scene.scene_id,
        image_width: camera.intrinsics.width_px,
        image_height: camera.intrinsics.height_px,
        objects,
        omitted,
    }
}
