use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::build::{io_err, DatasetManifest, PipelineError};
use super::config::Split;
use crate::annotate::AnnotationSet;
use crate::catalog::{load_catalog, Catalog, PartKind};

/// A class present in more than this fraction of images is flagged.
pub const OVERREPRESENTED_FRACTION: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        if values.is_empty() {
            return Summary { mean: 0.0, std: 0.0, min: 0.0, max: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Summary {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassFrequency {
    pub class_id: u32,
    pub part_id: String,
    pub kind: PartKind,
    pub instances: u64,
    /// Images containing the class at least once.
    pub images: u64,
    pub image_fraction: f64,
    pub overrepresented: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub images: u64,
    pub objects: u64,
    pub objects_per_image: Summary,
    pub strip_length_mm: Summary,
    pub split_sizes: BTreeMap<Split, u64>,
    pub classes: Vec<ClassFrequency>,
}

pub(crate) struct StatsInput<'a> {
    pub split: Split,
    pub strip_length_mm: f64,
    pub annotations: &'a AnnotationSet,
}

impl CorpusStats {
    pub(crate) fn compute(inputs: &[StatsInput], catalog: &Catalog) -> Result<CorpusStats, PipelineError> {
        if inputs.is_empty() {
            return Err(PipelineError::EmptyManifest);
        }
        let n = inputs.len() as u64;
        let counts: Vec<f64> = inputs.iter().map(|i| i.annotations.objects.len() as f64).collect();
        let lengths: Vec<f64> = inputs.iter().map(|i| i.strip_length_mm).collect();
        let mut split_sizes: BTreeMap<Split, u64> = Split::ALL.iter().map(|s| (*s, 0)).collect();
        let mut instances: BTreeMap<u32, u64> = BTreeMap::new();
        let mut images: BTreeMap<u32, u64> = BTreeMap::new();
        for input in inputs {
            *split_sizes.get_mut(&input.split).unwrap() += 1;
            let mut seen = std::collections::BTreeSet::new();
            for o in &input.annotations.objects {
                *instances.entry(o.class_id).or_default() += 1;
                seen.insert(o.class_id);
            }
            for c in seen {
                *images.entry(c).or_default() += 1;
            }
        }
        let classes = catalog
            .classes()
            .into_iter()
            .map(|p| {
                let c = p.class_id.expect("classes have ids");
                let with = images.get(&c).copied().unwrap_or(0);
                let fraction = with as f64 / n as f64;
                ClassFrequency {
                    class_id: c,
                    part_id: p.part_id.clone(),
                    kind: p.kind,
                    instances: instances.get(&c).copied().unwrap_or(0),
                    images: with,
                    image_fraction: fraction,
                    overrepresented: fraction > OVERREPRESENTED_FRACTION,
                }
            })
            .collect();
        Ok(CorpusStats {
            images: n,
            objects: counts.iter().sum::<f64>() as u64,
            objects_per_image: Summary::of(&counts),
            strip_length_mm: Summary::of(&lengths),
            split_sizes,
            classes,
        })
    }
}

/// Recomputes corpus statistics from a built dataset's annotation files.
pub fn corpus_stats(manifest_path: &Path) -> Result<CorpusStats, PipelineError> {
    let manifest = DatasetManifest::read(manifest_path)?;
    if manifest.scenes.is_empty() {
        return Err(PipelineError::EmptyManifest);
    }
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let catalog = match &manifest.config.catalog {
        Some(p) => load_catalog(p)?,
        None => Catalog::reference(),
    };
    let mut sets = Vec::with_capacity(manifest.scenes.len());
    for r in &manifest.scenes {
        let rel = r
            .files
            .iter()
            .find(|f| f.path.starts_with("annotations/"))
            .ok_or_else(|| PipelineError::Corrupt {
                path: manifest_path.to_path_buf(),
                message: format!("scene {} lists no annotation file", r.scene_id),
            })?;
        let path = root.join(&rel.path);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let set = AnnotationSet::from_json_slice(&bytes).map_err(|e| PipelineError::Corrupt {
            path: path.clone(),
            message: e.to_string(),
        })?;
        sets.push(set);
    }
    let inputs: Vec<StatsInput> = manifest
        .scenes
        .iter()
        .zip(&sets)
        .map(|(r, s)| StatsInput { split: r.split, strip_length_mm: r.strip_length_mm, annotations: s })
        .collect();
    CorpusStats::compute(&inputs, &catalog)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!((s.mean, s.min, s.max), (2.5, 1.0, 4.0));
        assert!((s.std - 1.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(CorpusStats::compute(&[], &Catalog::reference()), Err(PipelineError::EmptyManifest)));
    }
}
