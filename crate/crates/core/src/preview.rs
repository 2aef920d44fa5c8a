//! Flat-shaded debug rasterizer. Each part is drawn as the filled AABB of
//! its projection, far to near; ground-truth boxes can be outlined on top.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::annotate::AnnotationSet;
use crate::bbox::Box2D;
use crate::catalog::Catalog;
use crate::geometry::layout_strip;
use crate::scenegen::SceneSpec;

const BACKGROUND: Rgb<u8> = Rgb([40, 44, 52]);
const OUTLINE: Rgb<u8> = Rgb([0, 255, 0]);

fn to_rgb(c: [f64; 3]) -> Rgb<u8> {
    Rgb(c.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8))
}

fn pixel_range(lo: f64, hi: f64, limit: u32) -> std::ops::Range<u32> {
    let a = lo.floor().max(0.0) as u32;
    let b = (hi.ceil().max(0.0) as u32).min(limit);
    a.min(b)..b
}

fn fill(img: &mut RgbImage, b: &Box2D, color: Rgb<u8>) {
    let (w, h) = img.dimensions();
    for y in pixel_range(b.y, b.y2(), h) {
        for x in pixel_range(b.x, b.x2(), w) {
            img.put_pixel(x, y, color);
        }
    }
}

fn outline(img: &mut RgbImage, b: &Box2D, color: Rgb<u8>) {
    let (w, h) = img.dimensions();
    if b.is_empty() || w == 0 || h == 0 {
        return;
    }
    let x1 = (b.x.floor().max(0.0) as u32).min(w - 1);
    let y1 = (b.y.floor().max(0.0) as u32).min(h - 1);
    let x2 = ((b.x2().ceil() as u32).saturating_sub(1)).clamp(x1, w - 1);
    let y2 = ((b.y2().ceil() as u32).saturating_sub(1)).clamp(y1, h - 1);
    for x in x1..=x2 {
        img.put_pixel(x, y1, color);
        img.put_pixel(x, y2, color);
    }
    for y in y1..=y2 {
        img.put_pixel(x1, y, color);
        img.put_pixel(x2, y, color);
    }
}

/// Renders the scene; pure function of its inputs. An empty strip gives a
/// background-only image.
pub fn render_scene(scene: &SceneSpec, catalog: &Catalog, annotations: Option<&AnnotationSet>) -> RgbImage {
    let cam = &scene.camera;
    let k = &cam.intrinsics;
    let mut img = RgbImage::from_pixel(k.width_px, k.height_px, BACKGROUND);
    if scene.strip.placements.is_empty() {
        return img;
    }
    let layout = layout_strip(&scene.strip, catalog);
    let frame = cam.frame();
    let mut parts: Vec<(f64, usize, Box2D, Rgb<u8>)> = layout
        .all()
        .enumerate()
        .filter_map(|(i, p)| {
            let depth = cam.to_camera(&frame, p.bounds.center())[2];
            let b = cam.project_box(&p.bounds).ok()?;
            Some((depth, i, b, to_rgb(p.rgb)))
        })
        .collect();
    parts.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, _, b, c) in &parts {
        fill(&mut img, b, *c);
    }
    if let Some(set) = annotations {
        for o in &set.objects {
            outline(&mut img, &o.bbox, OUTLINE);
        }
    }
    img
}

pub fn write_png(img: &RgbImage, path: &Path) -> Result<(), image::ImageError> {
    img.save_with_format(path, image::ImageFormat::Png)
}
