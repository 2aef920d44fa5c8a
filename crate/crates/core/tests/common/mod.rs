//! Independent reference implementations used by the integration tests.
//! None of them call the code they check.

#![allow(dead_code)]

use statrs::distribution::{ChiSquared, ContinuousCDF};
use stripsynth::annotate::ClipSpan;
use stripsynth::bbox::Box2D;
use stripsynth::evalkit::{Detection, GtBox};
use stripsynth::rng::CounterRng;

// ---------------------------------------------------------------- statistics

/// `[p - 3 sigma, p + 3 sigma]` for the mean of `n` Bernoulli(p) draws.
pub fn three_sigma_band(p: f64, n: u64) -> (f64, f64) {
    let s = (p * (1.0 - p) / n as f64).sqrt();
    (p - 3.0 * s, p + 3.0 * s)
}

/// Pearson statistic and p-value against the given expected proportions.
pub fn chi_square(observed: &[u64], expected_p: &[f64]) -> (f64, f64) {
    let n: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(expected_p)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
    (stat, 1.0 - dist.cdf(stat))
}

// ------------------------------------------------------------------ clipping

/// Overlap clipping by interval placement: the permitted overlap is an
/// interval of length `cap` centered in the current overlap; if that would
/// push an edge past its anchor the interval slides (or shrinks) until both
/// anchors are respected.
pub fn clip_pair_oracle(l: &ClipSpan, r: &ClipSpan) -> (f64, f64) {
    let cap = 0.2 * l.component_width.min(r.component_width);
    let (lo, hi) = (r.left, l.right);
    if hi - lo <= cap + 1e-9 {
        return (l.right, r.left);
    }
    let mid = 0.5 * (lo + hi);
    let (mut a, mut b) = (mid - 0.5 * cap, mid + 0.5 * cap); // new r.left, new l.right
    if b < l.anchor {
        let shift = l.anchor - b;
        a += shift;
        b += shift;
    }
    if a > r.anchor {
        let shift = a - r.anchor;
        a -= shift;
        b -= shift;
    }
    // both constraints cannot be met with a full-length interval
    if b < l.anchor {
        b = l.anchor;
    }
    if a > r.anchor {
        a = r.anchor;
    }
    (b, a)
}

/// Random pair of fresh spans, ordered by center.
pub fn random_pair(rng: &mut CounterRng) -> (ClipSpan, ClipSpan) {
    let w1 = rng.uniform(1.0, 200.0);
    let w2 = rng.uniform(1.0, 200.0);
    let x1 = rng.uniform(0.0, 500.0);
    let x2 = x1 + rng.uniform(-0.5 * w1, 1.2 * w1);
    let a = ClipSpan::fresh(x1, x1 + w1);
    let b = ClipSpan::fresh(x2, x2 + w2);
    if a.anchor <= b.anchor {
        (a, b)
    } else {
        (b, a)
    }
}

// ------------------------------------------------------------------- metrics

pub fn iou_oracle(a: &Box2D, b: &Box2D) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    let inter = if ix > 0.0 && iy > 0.0 { ix * iy } else { 0.0 };
    let union = a.w * a.h + b.w * b.h - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Ranking rule: higher score first, then lower image id, then input order.
pub fn ranked(dets: &[Detection]) -> Vec<Detection> {
    let mut idx: Vec<usize> = (0..dets.len()).collect();
    idx.sort_by(|&i, &j| {
        dets[j]
            .score
            .partial_cmp(&dets[i].score)
            .unwrap()
            .then(dets[i].image_id.cmp(&dets[j].image_id))
            .then(i.cmp(&j))
    });
    idx.into_iter().map(|i| dets[i]).collect()
}

/// Number of true positives when the ranked detections claim ground truth
/// one by one, each taking the best-IoU unclaimed box (lowest index on ties).
fn greedy_claims(ranked: &[Detection], gts: &[GtBox], t: f64, class_aware: bool) -> Vec<Option<usize>> {
    let mut claimed = vec![false; gts.len()];
    let mut out = Vec::new();
    for d in ranked {
        let candidates: Vec<(usize, f64)> = gts
            .iter()
            .enumerate()
            .filter(|(g, gt)| !claimed[*g] && gt.image_id == d.image_id && (!class_aware || gt.class_id == d.class_id))
            .map(|(g, gt)| (g, iou_oracle(&d.bbox, &gt.bbox)))
            .filter(|(_, v)| *v >= t)
            .collect();
        let best = candidates
            .iter()
            .copied()
            .reduce(|a, b| if b.1 > a.1 { b } else { a });
        if let Some((g, _)) = best {
            claimed[g] = true;
        }
        out.push(best.map(|(g, _)| g));
    }
    out
}

/// AP by definition: for each recall level r on the 101-point grid, the best
/// precision among all ranking prefixes whose recall reaches r. Every prefix
/// is matched from scratch.
pub fn ap_oracle(dets: &[Detection], gts: &[GtBox], class: u32, t: f64) -> f64 {
    let gts_c: Vec<GtBox> = gts.iter().copied().filter(|g| g.class_id == class).collect();
    let dets_c: Vec<Detection> = ranked(dets).into_iter().filter(|d| d.class_id == class).collect();
    let npos = gts_c.len() as f64;
    let mut points = Vec::new();
    for k in 1..=dets_c.len() {
        let tp = greedy_claims(&dets_c[..k], &gts_c, t, true).iter().flatten().count() as f64;
        points.push((tp / k as f64, tp / npos));
    }
    let mut sum = 0.0;
    for i in 0..=100 {
        let r = i as f64 / 100.0;
        let best = points
            .iter()
            .filter(|(_, rec)| *rec >= r)
            .map(|(p, _)| *p)
            .fold(0.0, f64::max);
        sum += best;
    }
    sum / 101.0
}

/// `(mAP at each threshold averaged over GT classes, mean over thresholds)`.
pub fn map_oracle(dets: &[Detection], gts: &[GtBox], thresholds: &[f64]) -> (Vec<f64>, f64) {
    let mut classes: Vec<u32> = gts.iter().map(|g| g.class_id).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.is_empty() {
        return (vec![0.0; thresholds.len()], 0.0);
    }
    let per_t: Vec<f64> = thresholds
        .iter()
        .map(|&t| classes.iter().map(|&c| ap_oracle(dets, gts, c, t)).sum::<f64>() / classes.len() as f64)
        .collect();
    let mean = per_t.iter().sum::<f64>() / per_t.len() as f64;
    (per_t, mean)
}

pub fn f1_oracle(dets: &[Detection], gts: &[GtBox], t: f64, score_t: f64) -> f64 {
    let kept: Vec<Detection> = dets.iter().copied().filter(|d| d.score >= score_t).collect();
    if kept.is_empty() && gts.is_empty() {
        return 1.0;
    }
    let tp = greedy_claims(&ranked(&kept), gts, t, true).iter().flatten().count() as f64;
    let p = if kept.is_empty() { 0.0 } else { tp / kept.len() as f64 };
    let r = if gts.is_empty() { 0.0 } else { tp / gts.len() as f64 };
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn confusion_oracle(dets: &[Detection], gts: &[GtBox], classes: usize, t: f64, score_t: f64) -> Vec<Vec<u64>> {
    let kept = ranked(&dets.iter().copied().filter(|d| d.score >= score_t).collect::<Vec<_>>());
    let claims = greedy_claims(&kept, gts, t, false);
    let bg = classes;
    let mut m = vec![vec![0u64; classes + 1]; classes + 1];
    for (d, c) in kept.iter().zip(&claims) {
        match c {
            Some(g) => m[gts[*g].class_id as usize][d.class_id as usize] += 1,
            None => m[bg][d.class_id as usize] += 1,
        }
    }
    for (g, gt) in gts.iter().enumerate() {
        if !claims.contains(&Some(g)) {
            m[gt.class_id as usize][bg] += 1;
        }
    }
    m
}

/// Random micro-case: up to `max_images` images, `classes` classes and
/// `max_boxes` boxes each of ground truth and detections. Coordinates sit on
/// a coarse grid and scores come from a small set so ties are common.
pub fn micro_case(rng: &mut CounterRng, max_images: u64, classes: u32, max_boxes: u64) -> (Vec<Detection>, Vec<GtBox>) {
    let images = rng.range_inclusive(1, max_images);
    let rand_box = |rng: &mut CounterRng| {
        Box2D::new(
            4.0 * rng.below(6) as f64,
            4.0 * rng.below(3) as f64,
            4.0 * rng.range_inclusive(1, 4) as f64,
            4.0 * rng.range_inclusive(1, 3) as f64,
        )
    };
    let n_gt = rng.range_inclusive(0, max_boxes);
    let gts: Vec<GtBox> = (0..n_gt)
        .map(|_| GtBox {
            image_id: rng.below(images),
            class_id: rng.below(classes as u64) as u32,
            bbox: rand_box(rng),
        })
        .collect();
    let n_det = rng.range_inclusive(0, max_boxes);
    let dets: Vec<Detection> = (0..n_det)
        .map(|_| {
            // half the detections are jittered copies of a ground-truth box
            let (image_id, class_id, bbox) = if !gts.is_empty() && rng.bernoulli(0.5) {
                let g = gts[rng.index(gts.len())];
                let class_id = if rng.bernoulli(0.8) { g.class_id } else { rng.below(classes as u64) as u32 };
                let b = Box2D::new(g.bbox.x + rng.below(3) as f64, g.bbox.y, g.bbox.w, g.bbox.h + rng.below(2) as f64);
                (g.image_id, class_id, b)
            } else {
                (rng.below(images), rng.below(classes as u64) as u32, rand_box(rng))
            };
            Detection { image_id, class_id, bbox, score: rng.range_inclusive(1, 10) as f64 / 10.0 }
        })
        .collect();
    (dets, gts)
}

// ---------------------------------------------------------------- projection

/// Pixel column of world point `(x, z)` for a camera at `(cx_world, cz)`
/// looking down `-z` with the given focal length and principal point.
pub fn pinhole_u(x: f64, z: f64, cam_x: f64, cam_z: f64, f: f64, cx: f64) -> f64 {
    cx + f * (x - cam_x) / (cam_z - z)
}
