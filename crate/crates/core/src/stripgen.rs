//! Randomized terminal-strip assembly.
//!
//! A strip is built left to right: groups of identical terminal blocks are
//! appended until the number of rail-mounted objects exceeds
//! [`GenerationParams::object_threshold`], end covers are inserted wherever
//! the next block does not shield the open side of the previous one, the
//! strip is optionally enclosed by end clamps, and finally markings,
//! plug-in bridges and test adapters are attached.
//!
//! Draw order on the strip's [`CounterRng`] is fixed: group type and repeat
//! count, one material per block as it is placed, the end-clamp flag, then
//! markings, bridges and adapters (see the `place_*` functions).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{material_palette, sample_material, Catalog, MaterialSpec, PartKind, PartSpec};
use crate::rng::CounterRng;

pub const BRIDGE_RED: &str = "red";
pub const BRIDGE_BLUE: &str = "blue";

/// Upper bound on `object_threshold`; larger values cannot be built into a
/// finite strip in reasonable time.
pub const MAX_OBJECT_THRESHOLD: u32 = 10_000;

/// Shaft positions closer than this (mm, vertical) count as the same bridge level.
const SHAFT_ALIGN_TOLERANCE_MM: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationParams {
    /// Group insertion stops once blocks plus end covers exceed this.
    pub object_threshold: u32,
    pub max_group_repeat: u32,
    pub p_marking: f64,
    pub p_red_bridge: f64,
    /// Chance that a maximal bridgeable run receives a bridge.
    pub p_bridge_per_run: f64,
    pub p_adapter_per_shaft: f64,
    pub p_strip_without_adapters: f64,
    pub p_end_clamps: f64,
    pub end_cover_ratio: f64,
    pub adapter_colors: Vec<String>,
    pub seed: u64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            object_threshold: 16,
            max_group_repeat: 5,
            p_marking: 0.7,
            p_red_bridge: 0.7,
            p_bridge_per_run: 0.5,
            p_adapter_per_shaft: 0.1,
            p_strip_without_adapters: 0.2,
            p_end_clamps: 0.5,
            end_cover_ratio: 0.9,
            adapter_colors: ["red", "blue", "yellow", "green"].map(String::from).to_vec(),
            seed: 0,
        }
    }
}

impl GenerationParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        let bad = |msg: String| Err(GenerationError::InvalidParams(msg));
        for (name, p) in [
            ("p_marking", self.p_marking),
            ("p_red_bridge", self.p_red_bridge),
            ("p_bridge_per_run", self.p_bridge_per_run),
            ("p_adapter_per_shaft", self.p_adapter_per_shaft),
            ("p_strip_without_adapters", self.p_strip_without_adapters),
            ("p_end_clamps", self.p_end_clamps),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if self.object_threshold == 0 {
            return bad("object_threshold must be positive".into());
        }
        if self.max_group_repeat == 0 {
            return bad("max_group_repeat must be at least 1".into());
        }
        if !(self.end_cover_ratio > 0.0 && self.end_cover_ratio <= 1.0) {
            return bad(format!("end_cover_ratio = {} outside (0, 1]", self.end_cover_ratio));
        }
        if self.adapter_colors.is_empty() && self.p_adapter_per_shaft > 0.0 {
            return bad("adapter_colors is empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Attachment {
    Marking {
        point: u32,
    },
    /// Bridge at shaft level `level` from placement `first` to `last` (inclusive).
    Bridge {
        level: u32,
        first: usize,
        last: usize,
        color: String,
    },
    TestAdapter {
        shaft: u32,
        color: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacedPart {
    pub part_id: String,
    pub kind: PartKind,
    /// Running count of earlier placements with the same `part_id`.
    pub instance_index: u32,
    /// Left edge along the rail axis, mm from the strip start.
    pub rail_offset_mm: f64,
    /// `[width, height, depth]` as mounted; end covers take the height and
    /// depth of the block they close.
    pub size_mm: [f64; 3],
    pub material: MaterialSpec,
    #[serde(default)]
    pub attachments: Vec<Attachment>,
}

impl PlacedPart {
    pub fn width_mm(&self) -> f64 {
        self.size_mm[0]
    }
    pub fn height_mm(&self) -> f64 {
        self.size_mm[1]
    }
    pub fn depth_mm(&self) -> f64 {
        self.size_mm[2]
    }
    pub fn right_edge_mm(&self) -> f64 {
        self.rail_offset_mm + self.size_mm[0]
    }
}

/// A generated strip: the "parts list" of one terminal strip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripConfig {
    pub seed: u64,
    pub params: GenerationParams,
    pub placements: Vec<PlacedPart>,
    pub total_length_mm: f64,
    pub end_clamps: bool,
    pub adapters_suppressed: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum GenerationError {
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("catalog contains no terminal blocks")]
    NoTerminalBlocks,
    #[error("catalog has no {0} part")]
    MissingPart(PartKind),
    #[error("object threshold {0} cannot be reached (limit {MAX_OBJECT_THRESHOLD})")]
    ThresholdUnreachable(u32),
}

impl StripConfig {
    pub fn block_count(&self) -> usize {
        self.placements.iter().filter(|p| p.kind == PartKind::TerminalBlock).count()
    }

    /// Summary of the parts list: `(part_id, count)` in first-use order.
    pub fn part_counts(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for p in &self.placements {
            match out.iter_mut().find(|(id, _)| *id == p.part_id) {
                Some((_, n)) => *n += 1,
                None => out.push((p.part_id.clone(), 1)),
            }
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("strip serializes")
    }
}

/// True when `next` leaves the open side of `prev` uncovered.
pub fn needs_end_cover(prev_size: [f64; 3], next_size: [f64; 3], ratio: f64) -> bool {
    next_size[1] < ratio * prev_size[1] || next_size[2] < ratio * prev_size[2]
}

/// Assembles a strip from `catalog`, deterministically from `params.seed`.
pub fn generate_strip(catalog: &Catalog, params: &GenerationParams) -> Result<StripConfig, GenerationError> {
    params.validate()?;
    if params.object_threshold > MAX_OBJECT_THRESHOLD {
        return Err(GenerationError::ThresholdUnreachable(params.object_threshold));
    }
    let blocks = catalog.terminal_blocks();
    if blocks.is_empty() {
        return Err(GenerationError::NoTerminalBlocks);
    }
    let palette = material_palette(catalog);
    let mut rng = CounterRng::new(params.seed);

    let mut rail: Vec<(&PartSpec, [f64; 3], MaterialSpec)> = Vec::new();
    let mut last_block: Option<usize> = None;
    let mut last_group: Option<usize> = None;
    while rail.len() as u32 <= params.object_threshold {
        let ty = draw_group_type(&mut rng, blocks.len(), last_group);
        last_group = Some(ty);
        let block = blocks[ty];
        let size = [block.width_mm, block.height_mm, block.depth_mm];
        let repeat = rng.range_inclusive(1, params.max_group_repeat as u64);
        for _ in 0..repeat {
            if let Some(prev) = last_block {
                let (prev_spec, prev_size, prev_mat) = (rail[prev].0, rail[prev].1, rail[prev].2.clone());
                if needs_end_cover(prev_size, size, params.end_cover_ratio) {
                    let cover = end_cover_for(catalog, prev_spec)?;
                    rail.push((cover, [cover.width_mm, prev_size[1], prev_size[2]], prev_mat));
                }
            }
            let material = sample_material(&palette, &mut rng).clone();
            rail.push((block, size, material));
            last_block = Some(rail.len() - 1);
        }
    }
    if let Some(last) = last_block {
        let (spec, size, mat) = (rail[last].0, rail[last].1, rail[last].2.clone());
        if spec.open_sided {
            let cover = end_cover_for(catalog, spec)?;
            rail.push((cover, [cover.width_mm, size[1], size[2]], mat));
        }
    }

    let end_clamps = rng.bernoulli(params.p_end_clamps);
    if end_clamps {
        let clamp = catalog
            .first_of(PartKind::EndClamp)
            .ok_or(GenerationError::MissingPart(PartKind::EndClamp))?;
        let mat = clamp_material(catalog, &palette);
        let size = [clamp.width_mm, clamp.height_mm, clamp.depth_mm];
        rail.insert(0, (clamp, size, mat.clone()));
        rail.push((clamp, size, mat));
    }

    let mut placements = Vec::with_capacity(rail.len());
    let mut offset = 0.0;
    for (spec, size, material) in rail {
        let instance_index = placements.iter().filter(|p: &&PlacedPart| p.part_id == spec.part_id).count() as u32;
        placements.push(PlacedPart {
            part_id: spec.part_id.clone(),
            kind: spec.kind,
            instance_index,
            rail_offset_mm: offset,
            size_mm: size,
            material,
            attachments: Vec::new(),
        });
        offset += size[0];
    }
    let total_length_mm = placements.last().map(|p| p.right_edge_mm()).unwrap_or(0.0);

    let strip = StripConfig {
        seed: params.seed,
        params: params.clone(),
        placements,
        total_length_mm,
        end_clamps,
        adapters_suppressed: false,
    };
    let strip = place_markings(catalog, strip, &mut rng);
    let strip = place_bridges(catalog, strip, &mut rng);
    Ok(place_test_adapters(catalog, strip, &mut rng))
}

/// Uniform block type; a group never repeats the type of the group before it,
/// so runs of one part id stay within `max_group_repeat`.
fn draw_group_type(rng: &mut CounterRng, n: usize, previous: Option<usize>) -> usize {
    match previous {
        Some(prev) if n > 1 => {
            let i = rng.index(n - 1);
            if i >= prev {
                i + 1
            } else {
                i
            }
        }
        _ => rng.index(n),
    }
}

fn end_cover_for<'a>(catalog: &'a Catalog, block: &PartSpec) -> Result<&'a PartSpec, GenerationError> {
    block
        .compatible_end_cover
        .as_deref()
        .and_then(|id| catalog.part(id))
        .or_else(|| catalog.first_of(PartKind::EndCover))
        .ok_or(GenerationError::MissingPart(PartKind::EndCover))
}

fn clamp_material(catalog: &Catalog, palette: &[MaterialSpec]) -> MaterialSpec {
    catalog
        .color("steel")
        .or_else(|| palette.first())
        .cloned()
        .expect("validated catalog has a block palette")
}

/// Each marking point of each terminal block holds a marking with
/// probability `p_marking`; points are visited in placement order.
pub fn place_markings(catalog: &Catalog, mut strip: StripConfig, rng: &mut CounterRng) -> StripConfig {
    let p = strip.params.p_marking;
    for placed in strip.placements.iter_mut() {
        if placed.kind != PartKind::TerminalBlock {
            continue;
        }
        let points = catalog.part(&placed.part_id).map(|s| s.marking_points).unwrap_or(0);
        for point in 0..points {
            if rng.bernoulli(p) {
                placed.attachments.push(Attachment::Marking { point });
            }
        }
    }
    strip
}

/// Maximal runs of adjacent terminal blocks whose shaft `level` is bridgeable
/// and vertically aligned. Runs break at any non-block placement.
pub fn bridgeable_runs(catalog: &Catalog, strip: &StripConfig, level: u32) -> Vec<Vec<usize>> {
    let mut runs = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut current_y = 0.0;
    for (i, placed) in strip.placements.iter().enumerate() {
        let shaft = (placed.kind == PartKind::TerminalBlock)
            .then(|| catalog.part(&placed.part_id))
            .flatten()
            .and_then(|spec| spec.shafts.iter().find(|s| s.shaft_index == level))
            .filter(|s| s.bridgeable);
        match shaft {
            Some(s) if current.is_empty() || (s.position_mm[1] - current_y).abs() <= SHAFT_ALIGN_TOLERANCE_MM => {
                if current.is_empty() {
                    current_y = s.position_mm[1];
                }
                current.push(i);
            }
            Some(s) => {
                if current.len() >= 2 {
                    runs.push(std::mem::take(&mut current));
                }
                current.clear();
                current_y = s.position_mm[1];
                current.push(i);
            }
            None => {
                if current.len() >= 2 {
                    runs.push(std::mem::take(&mut current));
                }
                current.clear();
            }
        }
    }
    if current.len() >= 2 {
        runs.push(current);
    }
    runs
}

/// For each shaft level and each maximal bridgeable run of length `n >= 2`,
/// with probability `p_bridge_per_run` one bridge is placed: start uniform
/// in `0..=n-2`, length uniform in `2..=n-start`, red with probability
/// `p_red_bridge`, otherwise blue.
pub fn place_bridges(catalog: &Catalog, mut strip: StripConfig, rng: &mut CounterRng) -> StripConfig {
    let levels = strip
        .placements
        .iter()
        .filter(|p| p.kind == PartKind::TerminalBlock)
        .filter_map(|p| catalog.part(&p.part_id))
        .flat_map(|s| s.shafts.iter().map(|sh| sh.shaft_index + 1))
        .max()
        .unwrap_or(0);
    let (p_run, p_red) = (strip.params.p_bridge_per_run, strip.params.p_red_bridge);
    for level in 0..levels {
        for run in bridgeable_runs(catalog, &strip, level) {
            if !rng.bernoulli(p_run) {
                continue;
            }
            let n = run.len() as u64;
            let start = rng.below(n - 1);
            let len = rng.range_inclusive(2, n - start);
            let color = if rng.bernoulli(p_red) { BRIDGE_RED } else { BRIDGE_BLUE };
            let first = run[start as usize];
            let last = run[(start + len - 1) as usize];
            strip.placements[first].attachments.push(Attachment::Bridge {
                level,
                first,
                last,
                color: color.to_string(),
            });
        }
    }
    strip
}

/// `(placement, shaft level)` pairs covered by a bridge.
pub fn bridged_shafts(strip: &StripConfig) -> HashSet<(usize, u32)> {
    let mut out = HashSet::new();
    for placed in &strip.placements {
        for a in &placed.attachments {
            if let Attachment::Bridge { level, first, last, .. } = a {
                for i in *first..=*last {
                    out.insert((i, *level));
                }
            }
        }
    }
    out
}

/// Strip-level suppression is drawn first; otherwise every shaft not covered
/// by a bridge holds an adapter with probability `p_adapter_per_shaft`, in a
/// color drawn uniformly from `adapter_colors`.
pub fn place_test_adapters(catalog: &Catalog, mut strip: StripConfig, rng: &mut CounterRng) -> StripConfig {
    strip.adapters_suppressed = rng.bernoulli(strip.params.p_strip_without_adapters);
    if strip.adapters_suppressed {
        return strip;
    }
    let occupied = bridged_shafts(&strip);
    let p = strip.params.p_adapter_per_shaft;
    let colors = strip.params.adapter_colors.clone();
    for (i, placed) in strip.placements.iter_mut().enumerate() {
        if placed.kind != PartKind::TerminalBlock {
            continue;
        }
        let Some(spec) = catalog.part(&placed.part_id) else { continue };
        for shaft in &spec.shafts {
            if occupied.contains(&(i, shaft.shaft_index)) {
                continue;
            }
            if rng.bernoulli(p) {
                let color = colors[rng.index(colors.len())].clone();
                placed.attachments.push(Attachment::TestAdapter {
                    shaft: shaft.shaft_index,
                    color,
                });
            }
        }
    }
    strip
}

/// End-cover rule violations: `(block index, next block index)` pairs with no
/// cover between them although one is required, plus a trailing open-sided
/// block without cover (reported with `next == placements.len()`).
pub fn end_cover_violations(catalog: &Catalog, strip: &StripConfig) -> Vec<(usize, usize)> {
    let ratio = strip.params.end_cover_ratio;
    let p = &strip.placements;
    let blocks: Vec<usize> = (0..p.len()).filter(|&i| p[i].kind == PartKind::TerminalBlock).collect();
    let covered = |a: usize, b: usize| p[a + 1..b].iter().any(|q| q.kind == PartKind::EndCover);
    let mut out = Vec::new();
    for w in blocks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if needs_end_cover(p[a].size_mm, p[b].size_mm, ratio) && !covered(a, b) {
            out.push((a, b));
        }
    }
    if let Some(&last) = blocks.last() {
        let open = catalog.part(&p[last].part_id).map(|s| s.open_sided).unwrap_or(false);
        if open && !covered(last, p.len()) {
            out.push((last, p.len()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> Catalog {
        Catalog::reference()
    }

    #[test]
    fn deterministic_serialization() {
        let c = reference();
        let params = GenerationParams::default().with_seed(1234);
        let a = generate_strip(&c, &params).unwrap().to_json_string();
        let b = generate_strip(&c, &params).unwrap().to_json_string();
        assert_eq!(a, b);
        let other = generate_strip(&c, &params.clone().with_seed(1235)).unwrap().to_json_string();
        assert_ne!(a, other);
    }

    #[test]
    fn end_cover_ratio_example() {
        assert!(needs_end_cover([6.2, 56.0, 60.0], [6.2, 50.0, 60.0], 0.9));
        assert!(!needs_end_cover([6.2, 56.0, 60.0], [6.2, 51.0, 60.0], 0.9));
        assert!(needs_end_cover([6.2, 56.0, 60.0], [6.2, 56.0, 53.0], 0.9));
        assert!(!needs_end_cover([6.2, 50.0, 60.0], [6.2, 56.0, 60.0], 0.9));
    }

    #[test]
    fn structural_invariants() {
        let c = reference();
        for seed in 0..300 {
            let s = generate_strip(&c, &GenerationParams::default().with_seed(seed)).unwrap();
            for w in s.placements.windows(2) {
                assert!(w[0].rail_offset_mm <= w[1].rail_offset_mm);
                assert!(w[0].right_edge_mm() <= w[1].rail_offset_mm + 1e-9);
            }
            let last = s.placements.last().unwrap();
            assert_eq!(s.total_length_mm, last.right_edge_mm());
            assert!(end_cover_violations(&c, &s).is_empty());
            // runs of identical part ids
            let mut run = 1;
            for w in s.placements.windows(2) {
                if w[0].part_id == w[1].part_id && w[0].kind == PartKind::TerminalBlock {
                    run += 1;
                } else {
                    run = 1;
                }
                assert!(run <= 5);
            }
            let clamps: Vec<usize> = (0..s.placements.len())
                .filter(|&i| s.placements[i].kind == PartKind::EndClamp)
                .collect();
            if s.end_clamps {
                assert_eq!(clamps, vec![0, s.placements.len() - 1]);
            } else {
                assert!(clamps.is_empty());
            }
            let rail_objects = s
                .placements
                .iter()
                .filter(|p| matches!(p.kind, PartKind::TerminalBlock | PartKind::EndCover))
                .count();
            assert!(rail_objects > s.params.object_threshold as usize);
        }
    }

    #[test]
    fn zero_marking_points_zero_markings() {
        let c = reference();
        let mut params = GenerationParams::default().with_seed(3);
        params.p_marking = 1.0;
        let s = generate_strip(&c, &params).unwrap();
        for p in &s.placements {
            let n = p.attachments.iter().filter(|a| matches!(a, Attachment::Marking { .. })).count();
            let expected = if p.kind == PartKind::TerminalBlock {
                c.part(&p.part_id).unwrap().marking_points as usize
            } else {
                0
            };
            assert_eq!(n, expected);
        }
    }

    #[test]
    fn bridges_respect_runs_and_levels() {
        let c = reference();
        for seed in 0..300 {
            let s = generate_strip(&c, &GenerationParams::default().with_seed(seed)).unwrap();
            let mut per_level: std::collections::HashMap<u32, Vec<(usize, usize)>> = Default::default();
            for (i, p) in s.placements.iter().enumerate() {
                for a in &p.attachments {
                    if let Attachment::Bridge { level, first, last, color } = a {
                        assert_eq!(*first, i);
                        assert!(last > first);
                        assert!(color == BRIDGE_RED || color == BRIDGE_BLUE);
                        let runs = bridgeable_runs(&c, &s, *level);
                        assert!(runs.iter().any(|r| r.contains(first) && r.contains(last)));
                        per_level.entry(*level).or_default().push((*first, *last));
                    }
                }
            }
            for spans in per_level.values() {
                for (i, a) in spans.iter().enumerate() {
                    for b in &spans[i + 1..] {
                        assert!(a.1 < b.0 || b.1 < a.0, "overlapping bridges {a:?} {b:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn adapters_avoid_bridged_shafts() {
        let c = reference();
        let mut params = GenerationParams::default();
        params.p_adapter_per_shaft = 1.0;
        params.p_strip_without_adapters = 0.0;
        params.p_bridge_per_run = 1.0;
        for seed in 0..100 {
            let s = generate_strip(&c, &params.clone().with_seed(seed)).unwrap();
            let bridged = bridged_shafts(&s);
            for (i, p) in s.placements.iter().enumerate() {
                for a in &p.attachments {
                    if let Attachment::TestAdapter { shaft, .. } = a {
                        assert!(!bridged.contains(&(i, *shaft)));
                    }
                }
                if p.kind == PartKind::TerminalBlock {
                    let spec = c.part(&p.part_id).unwrap();
                    let adapters = p.attachments.iter().filter(|a| matches!(a, Attachment::TestAdapter { .. })).count();
                    let free = spec.shafts.iter().filter(|sh| !bridged.contains(&(i, sh.shaft_index))).count();
                    assert_eq!(adapters, free);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        let c = reference();
        let mut p = GenerationParams::default();
        p.p_marking = 1.5;
        assert!(matches!(generate_strip(&c, &p), Err(GenerationError::InvalidParams(_))));
        let mut p = GenerationParams::default();
        p.object_threshold = MAX_OBJECT_THRESHOLD + 1;
        assert_eq!(generate_strip(&c, &p), Err(GenerationError::ThresholdUnreachable(MAX_OBJECT_THRESHOLD + 1)));
        let mut p = GenerationParams::default();
        p.end_cover_ratio = 0.0;
        assert!(generate_strip(&c, &p).is_err());
    }

    #[test]
    fn parts_list_round_trip() {
        let c = reference();
        let s = generate_strip(&c, &GenerationParams::default().with_seed(99)).unwrap();
        let back: StripConfig = serde_json::from_str(&s.to_json_string()).unwrap();
        assert_eq!(back, s);
        let counts = s.part_counts();
        assert_eq!(counts.iter().map(|(_, n)| n).sum::<usize>(), s.placements.len());
    }
}
