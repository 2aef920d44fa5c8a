//! Part catalog: geometry, shaft layout, marking points and material palettes.
//!
//! The on-disk format is a single JSON object with one array per part kind
//! (`terminal_blocks`, `end_covers`, `end_clamps`, `plug_in_bridges`,
//! `test_adapters`, `markings`, `din_rails`) plus the `block_materials` and
//! `accessory_materials` palettes. See `docs/catalog-format.md`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::CounterRng;

/// The catalog shipped with the crate.
pub const REFERENCE_CATALOG_JSON: &str = include_str!("../data/reference_catalog.json");

/// Name of the housing material that receives the dominant selection weight.
pub const DEFAULT_MATERIAL: &str = "gray";
/// Selection weight of [`DEFAULT_MATERIAL`] when weights are not given explicitly.
pub const DEFAULT_MATERIAL_WEIGHT: f64 = 0.8;

const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartKind {
    TerminalBlock,
    EndCover,
    EndClamp,
    PlugInBridge,
    TestAdapter,
    Marking,
    DinRail,
}

impl PartKind {
    pub const ALL: [PartKind; 7] = [
        PartKind::TerminalBlock,
        PartKind::EndCover,
        PartKind::EndClamp,
        PartKind::PlugInBridge,
        PartKind::TestAdapter,
        PartKind::Marking,
        PartKind::DinRail,
    ];

    /// Whether parts of this kind receive ground-truth boxes.
    pub fn is_annotated(self) -> bool {
        !matches!(self, PartKind::Marking | PartKind::DinRail)
    }

    pub fn is_accessory(self) -> bool {
        matches!(
            self,
            PartKind::EndCover | PartKind::EndClamp | PartKind::PlugInBridge | PartKind::TestAdapter
        )
    }

    fn array_name(self) -> &'static str {
        match self {
            PartKind::TerminalBlock => "terminal_blocks",
            PartKind::EndCover => "end_covers",
            PartKind::EndClamp => "end_clamps",
            PartKind::PlugInBridge => "plug_in_bridges",
            PartKind::TestAdapter => "test_adapters",
            PartKind::Marking => "markings",
            PartKind::DinRail => "din_rails",
        }
    }
}

impl fmt::Display for PartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PartKind::TerminalBlock => "terminal_block",
            PartKind::EndCover => "end_cover",
            PartKind::EndClamp => "end_clamp",
            PartKind::PlugInBridge => "plug_in_bridge",
            PartKind::TestAdapter => "test_adapter",
            PartKind::Marking => "marking",
            PartKind::DinRail => "din_rail",
        };
        f.write_str(s)
    }
}

/// A receptacle on the front face of a part that can host a bridge or a test adapter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShaftSpec {
    pub shaft_index: u32,
    pub bridgeable: bool,
    /// Offset `[x, y]` from the center of the part's front face, in mm
    /// (x along the rail, y up).
    pub position_mm: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartSpec {
    pub part_id: String,
    pub kind: PartKind,
    pub width_mm: f64,
    pub height_mm: f64,
    pub depth_mm: f64,
    #[serde(default)]
    pub shafts: Vec<ShaftSpec>,
    #[serde(default)]
    pub marking_points: u32,
    #[serde(default)]
    pub open_sided: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compatible_end_cover: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_id: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub name: String,
    pub rgb: [f64; 3],
    pub roughness: f64,
    pub specular: f64,
    pub metallic: f64,
    pub selection_weight: f64,
}

/// One entry of a part array; the kind comes from the array it sits in.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartEntry {
    part_id: String,
    width_mm: f64,
    height_mm: f64,
    depth_mm: f64,
    #[serde(default)]
    shafts: Vec<ShaftSpec>,
    #[serde(default)]
    marking_points: u32,
    #[serde(default)]
    open_sided: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    compatible_end_cover: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class_id: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialEntry {
    name: String,
    rgb: [f64; 3],
    roughness: f64,
    specular: f64,
    metallic: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    selection_weight: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    format_version: u32,
    #[serde(default)]
    description: String,
    block_materials: Vec<MaterialEntry>,
    #[serde(default)]
    accessory_materials: Vec<MaterialEntry>,
    #[serde(default)]
    terminal_blocks: Vec<PartEntry>,
    #[serde(default)]
    end_covers: Vec<PartEntry>,
    #[serde(default)]
    end_clamps: Vec<PartEntry>,
    #[serde(default)]
    plug_in_bridges: Vec<PartEntry>,
    #[serde(default)]
    test_adapters: Vec<PartEntry>,
    #[serde(default)]
    markings: Vec<PartEntry>,
    #[serde(default)]
    din_rails: Vec<PartEntry>,
}

/// One validation finding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub part_id: Option<String>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.part_id {
            Some(id) => write!(f, "part `{id}`: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("catalog parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("catalog validation failed: {}", .0.first().map(|i| i.to_string()).unwrap_or_default())]
    Invalid(Vec<Issue>),
}

impl CatalogError {
    pub fn issues(&self) -> &[Issue] {
        match self {
            CatalogError::Invalid(issues) => issues,
            _ => &[],
        }
    }
}

/// A validated, immutable part catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    description: String,
    parts: Vec<PartSpec>,
    index: HashMap<String, usize>,
    block_materials: Vec<MaterialSpec>,
    accessory_materials: Vec<MaterialSpec>,
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Catalog::from_json_str(&text)
}

/// Resolved palette of the catalog's housing materials.
pub fn material_palette(catalog: &Catalog) -> Vec<MaterialSpec> {
    catalog.block_materials.clone()
}

/// Draws a palette entry proportionally to its selection weight.
pub fn sample_material<'a>(palette: &'a [MaterialSpec], rng: &mut CounterRng) -> &'a MaterialSpec {
    let weights: Vec<f64> = palette.iter().map(|m| m.selection_weight).collect();
    let i = rng
        .weighted_index(&weights)
        .expect("validated palette has positive total weight");
    &palette[i]
}

impl Catalog {
    pub fn reference() -> Catalog {
        Catalog::from_json_str(REFERENCE_CATALOG_JSON).expect("reference catalog is valid")
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Catalog, CatalogError> {
        let file: CatalogFile = serde_json::from_slice(bytes)?;
        Catalog::from_file(file)
    }

    pub fn from_json_str(text: &str) -> Result<Catalog, CatalogError> {
        let file: CatalogFile = serde_json::from_str(text)?;
        Catalog::from_file(file)
    }

    fn from_file(file: CatalogFile) -> Result<Catalog, CatalogError> {
        let mut issues = Vec::new();
        if file.format_version != 1 {
            issues.push(Issue {
                part_id: None,
                message: format!("unsupported format_version {}", file.format_version),
            });
        }

        let arrays = [
            (PartKind::TerminalBlock, file.terminal_blocks),
            (PartKind::EndCover, file.end_covers),
            (PartKind::EndClamp, file.end_clamps),
            (PartKind::PlugInBridge, file.plug_in_bridges),
            (PartKind::TestAdapter, file.test_adapters),
            (PartKind::Marking, file.markings),
            (PartKind::DinRail, file.din_rails),
        ];
        let mut parts = Vec::new();
        for (kind, entries) in arrays {
            for e in entries {
                parts.push(PartSpec {
                    part_id: e.part_id,
                    kind,
                    width_mm: e.width_mm,
                    height_mm: e.height_mm,
                    depth_mm: e.depth_mm,
                    shafts: e.shafts,
                    marking_points: e.marking_points,
                    open_sided: e.open_sided,
                    compatible_end_cover: e.compatible_end_cover,
                    class_id: e.class_id,
                });
            }
        }

        let mut index = HashMap::new();
        for (i, p) in parts.iter().enumerate() {
            if p.part_id.is_empty() {
                issues.push(Issue {
                    part_id: None,
                    message: format!("empty part_id in {}", p.kind.array_name()),
                });
            }
            if index.insert(p.part_id.clone(), i).is_some() {
                issues.push(issue(&p.part_id, "duplicate part_id"));
            }
        }
        for p in &parts {
            validate_part(p, &parts, &index, &mut issues);
        }
        validate_class_ids(&parts, &mut issues);
        if !parts.iter().any(|p| p.kind == PartKind::TerminalBlock) {
            issues.push(Issue {
                part_id: None,
                message: "catalog contains no terminal blocks".into(),
            });
        }

        let block_materials = resolve_palette("block_materials", file.block_materials, true, &mut issues);
        let accessory_materials =
            resolve_palette("accessory_materials", file.accessory_materials, false, &mut issues);

        if !issues.is_empty() {
            return Err(CatalogError::Invalid(issues));
        }
        Ok(Catalog {
            description: file.description,
            parts,
            index,
            block_materials,
            accessory_materials,
        })
    }

    /// Serializes back into the on-disk format.
    pub fn to_json_string(&self) -> String {
        let entries = |kind: PartKind| -> Vec<PartEntry> {
            self.parts_of(kind)
                .map(|p| PartEntry {
                    part_id: p.part_id.clone(),
                    width_mm: p.width_mm,
                    height_mm: p.height_mm,
                    depth_mm: p.depth_mm,
                    shafts: p.shafts.clone(),
                    marking_points: p.marking_points,
                    open_sided: p.open_sided,
                    compatible_end_cover: p.compatible_end_cover.clone(),
                    class_id: p.class_id,
                })
                .collect()
        };
        let materials = |ms: &[MaterialSpec]| -> Vec<MaterialEntry> {
            ms.iter()
                .map(|m| MaterialEntry {
                    name: m.name.clone(),
                    rgb: m.rgb,
                    roughness: m.roughness,
                    specular: m.specular,
                    metallic: m.metallic,
                    selection_weight: Some(m.selection_weight),
                })
                .collect()
        };
        let file = CatalogFile {
            format_version: 1,
            description: self.description.clone(),
            block_materials: materials(&self.block_materials),
            accessory_materials: materials(&self.accessory_materials),
            terminal_blocks: entries(PartKind::TerminalBlock),
            end_covers: entries(PartKind::EndCover),
            end_clamps: entries(PartKind::EndClamp),
            plug_in_bridges: entries(PartKind::PlugInBridge),
            test_adapters: entries(PartKind::TestAdapter),
            markings: entries(PartKind::Marking),
            din_rails: entries(PartKind::DinRail),
        };
        serde_json::to_string_pretty(&file).expect("catalog serializes")
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn parts(&self) -> &[PartSpec] {
        &self.parts
    }

    pub fn part(&self, part_id: &str) -> Option<&PartSpec> {
        self.index.get(part_id).map(|&i| &self.parts[i])
    }

    pub fn parts_of(&self, kind: PartKind) -> impl Iterator<Item = &PartSpec> + '_ {
        self.parts.iter().filter(move |p| p.kind == kind)
    }

    pub fn count_of(&self, kind: PartKind) -> usize {
        self.parts_of(kind).count()
    }

    pub fn first_of(&self, kind: PartKind) -> Option<&PartSpec> {
        self.parts_of(kind).next()
    }

    pub fn terminal_blocks(&self) -> Vec<&PartSpec> {
        self.parts_of(PartKind::TerminalBlock).collect()
    }

    /// Annotated parts sorted by class id.
    pub fn classes(&self) -> Vec<&PartSpec> {
        let mut v: Vec<&PartSpec> = self.parts.iter().filter(|p| p.class_id.is_some()).collect();
        v.sort_by_key(|p| p.class_id);
        v
    }

    pub fn class_count(&self) -> usize {
        self.parts.iter().filter(|p| p.class_id.is_some()).count()
    }

    /// Class id of the first catalog entry of `kind`, if annotated.
    pub fn class_of_kind(&self, kind: PartKind) -> Option<u32> {
        self.first_of(kind).and_then(|p| p.class_id)
    }

    pub fn block_materials(&self) -> &[MaterialSpec] {
        &self.block_materials
    }

    pub fn accessory_materials(&self) -> &[MaterialSpec] {
        &self.accessory_materials
    }

    /// Looks a color name up in both palettes (accessories first).
    pub fn color(&self, name: &str) -> Option<&MaterialSpec> {
        self.accessory_materials
            .iter()
            .chain(self.block_materials.iter())
            .find(|m| m.name == name)
    }
}

fn issue(part_id: &str, message: impl Into<String>) -> Issue {
    Issue {
        part_id: Some(part_id.to_string()),
        message: message.into(),
    }
}

fn validate_part(
    p: &PartSpec,
    parts: &[PartSpec],
    index: &HashMap<String, usize>,
    issues: &mut Vec<Issue>,
) {
    for (name, v) in [
        ("width_mm", p.width_mm),
        ("height_mm", p.height_mm),
        ("depth_mm", p.depth_mm),
    ] {
        if !(v.is_finite() && v > 0.0) {
            issues.push(issue(&p.part_id, format!("{name} must be positive and finite, got {v}")));
        }
    }
    let mut seen = HashSet::new();
    for s in &p.shafts {
        if !seen.insert(s.shaft_index) {
            issues.push(issue(&p.part_id, format!("duplicate shaft_index {}", s.shaft_index)));
        }
        if !s.position_mm.iter().all(|v| v.is_finite()) {
            issues.push(issue(&p.part_id, format!("shaft {} has non-finite position", s.shaft_index)));
        }
    }
    if let Some(cover) = &p.compatible_end_cover {
        match index.get(cover) {
            None => issues.push(issue(&p.part_id, format!("compatible_end_cover `{cover}` does not exist"))),
            Some(&i) if parts[i].kind != PartKind::EndCover => issues.push(issue(
                &p.part_id,
                format!("compatible_end_cover `{cover}` is a {}, not an end_cover", parts[i].kind),
            )),
            Some(_) => {}
        }
    }
    match (p.kind.is_annotated(), p.class_id) {
        (true, None) => issues.push(issue(&p.part_id, format!("{} requires a class_id", p.kind))),
        (false, Some(_)) => issues.push(issue(&p.part_id, format!("{} must not carry a class_id", p.kind))),
        _ => {}
    }
}

fn validate_class_ids(parts: &[PartSpec], issues: &mut Vec<Issue>) {
    let mut ids: Vec<(u32, &str)> = parts
        .iter()
        .filter_map(|p| p.class_id.map(|c| (c, p.part_id.as_str())))
        .collect();
    ids.sort();
    let mut duplicates = false;
    for w in ids.windows(2) {
        if w[0].0 == w[1].0 {
            duplicates = true;
            issues.push(issue(w[1].1, format!("class_id {} already used by `{}`", w[1].0, w[0].1)));
        }
    }
    if duplicates {
        return;
    }
    for (expected, (c, id)) in ids.iter().enumerate() {
        if *c as usize != expected {
            issues.push(issue(id, format!("class ids must form the range 0..{}; found {c}", ids.len())));
            break;
        }
    }
}

fn resolve_palette(
    name: &str,
    entries: Vec<MaterialEntry>,
    required: bool,
    issues: &mut Vec<Issue>,
) -> Vec<MaterialSpec> {
    let palette_issue = |message: String| Issue {
        part_id: None,
        message: format!("{name}: {message}"),
    };
    if entries.is_empty() {
        if required {
            issues.push(palette_issue("palette is empty".into()));
        }
        return Vec::new();
    }
    for m in &entries {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(m.rgb.iter().all(|&c| in_unit(c))
            && in_unit(m.roughness)
            && in_unit(m.specular)
            && in_unit(m.metallic))
        {
            issues.push(palette_issue(format!("material `{}` has values outside [0, 1]", m.name)));
        }
    }
    let explicit = entries.iter().filter(|m| m.selection_weight.is_some()).count();
    let weights: Vec<f64> = if explicit == entries.len() {
        let w: Vec<f64> = entries.iter().map(|m| m.selection_weight.unwrap()).collect();
        let total: f64 = w.iter().sum();
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (total - 1.0).abs() > WEIGHT_TOLERANCE {
            issues.push(palette_issue(format!("selection weights must be non-negative and sum to 1, got {total}")));
        }
        w
    } else if explicit == 0 {
        default_weights(&entries)
    } else {
        issues.push(palette_issue("selection_weight must be given for all entries or none".into()));
        vec![0.0; entries.len()]
    };
    entries
        .into_iter()
        .zip(weights)
        .map(|(m, w)| MaterialSpec {
            name: m.name,
            rgb: m.rgb,
            roughness: m.roughness,
            specular: m.specular,
            metallic: m.metallic,
            selection_weight: w,
        })
        .collect()
}

/// Gray gets 0.8 and the remaining `k` share 0.2 uniformly; a lone gray gets
/// 1 and a palette without gray is uniform.
fn default_weights(entries: &[MaterialEntry]) -> Vec<f64> {
    let Some(gray) = entries.iter().position(|m| m.name == DEFAULT_MATERIAL) else {
        return vec![1.0 / entries.len() as f64; entries.len()];
    };
    let k = entries.len() - 1;
    if k == 0 {
        return vec![1.0];
    }
    let rest = (1.0 - DEFAULT_MATERIAL_WEIGHT) / k as f64;
    (0..entries.len())
        .map(|i| if i == gray { DEFAULT_MATERIAL_WEIGHT } else { rest })
        .collect()
}
