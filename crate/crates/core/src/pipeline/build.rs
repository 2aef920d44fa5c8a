use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::config::{assign_splits, PipelineConfig, Split};
use super::stats::{CorpusStats, StatsInput};
use crate::annotate::{annotate_scene, AnnotationSet};
use crate::catalog::{load_catalog, Catalog, CatalogError};
use crate::coco::{export_coco, split_file_name, CocoError};
use crate::preview::{render_scene, write_png};
use crate::scenegen::{generate_scene, SceneError, SceneSpec};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("scene {index}: {source}")]
    Scene {
        index: u64,
        #[source]
        source: SceneError,
    },
    #[error(transparent)]
    Coco(#[from] CocoError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("could not write preview {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("manifest lists no scenes")]
    EmptyManifest,
    #[error("worker pool: {0}")]
    Pool(String),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the dataset root, `/`-separated.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub scene_id: u64,
    pub seed: u64,
    pub split: Split,
    pub object_count: usize,
    pub strip_length_mm: f64,
    pub files: Vec<FileRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub toolkit_version: String,
    pub config: PipelineConfig,
    pub split_sizes: BTreeMap<Split, u64>,
    pub scenes: Vec<SceneRecord>,
    pub coco_files: Vec<FileRecord>,
    pub stats: CorpusStats,
}

impl DatasetManifest {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<DatasetManifest, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    pub fn read(path: &Path) -> Result<DatasetManifest, PipelineError> {
        let bytes = fs::read(path).map_err(io_err(path))?;
        DatasetManifest::from_json_slice(&bytes).map_err(|e| PipelineError::Corrupt {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(root: &Path, rel: &str, bytes: &[u8]) -> Result<FileRecord, PipelineError> {
    let path = root.join(rel);
    fs::write(&path, bytes).map_err(io_err(&path))?;
    Ok(FileRecord { path: rel.to_string(), sha256: sha256_hex(bytes) })
}

/// Scene and annotations of one corpus index, in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneArtifacts {
    pub scene: SceneSpec,
    pub annotations: AnnotationSet,
}

pub fn scene_artifacts(cfg: &PipelineConfig, catalog: &Catalog, index: u64) -> Result<SceneArtifacts, PipelineError> {
    let scene = generate_scene(catalog, &cfg.generation, &cfg.scene, cfg.master_seed, index)
        .map_err(|source| PipelineError::Scene { index, source })?;
    let annotations = annotate_scene(&scene, catalog, &cfg.annotate);
    Ok(SceneArtifacts { scene, annotations })
}

fn build_one(
    cfg: &PipelineConfig,
    catalog: &Catalog,
    root: &Path,
    index: u64,
    split: Split,
) -> Result<(SceneRecord, AnnotationSet), PipelineError> {
    let SceneArtifacts { scene, annotations } = scene_artifacts(cfg, catalog, index)?;
    let mut files = vec![
        write_file(root, &format!("scenes/scene_{index}.json"), scene.to_json_string().as_bytes())?,
        write_file(root, &format!("annotations/scene_{index}.json"), annotations.to_json_string().as_bytes())?,
    ];
    if cfg.previews {
        let rel = format!("previews/scene_{index}.png");
        let path = root.join(&rel);
        write_png(&render_scene(&scene, catalog, Some(&annotations)), &path)
            .map_err(|source| PipelineError::Image { path: path.clone(), source })?;
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        files.push(FileRecord { path: rel, sha256: sha256_hex(&bytes) });
    }
    let record = SceneRecord {
        scene_id: scene.scene_id,
        seed: scene.seed,
        split,
        object_count: annotations.objects.len(),
        strip_length_mm: scene.strip.total_length_mm,
        files,
    };
    Ok((record, annotations))
}

/// Generates, annotates, splits and exports the corpus under
/// `cfg.output_dir`, then writes `manifest.json`.
///
/// Scenes are built in parallel and collected by index, so every output
/// byte is independent of the worker count.
pub fn build_dataset(cfg: &PipelineConfig) -> Result<DatasetManifest, PipelineError> {
    cfg.validate()?;
    let catalog = match &cfg.catalog {
        Some(p) => load_catalog(p)?,
        None => Catalog::reference(),
    };
    let root = cfg.output_dir.as_path();
    let mut dirs = vec!["scenes", "annotations", "coco"];
    if cfg.previews {
        dirs.push("previews");
    }
    for d in dirs {
        let p = root.join(d);
        fs::create_dir_all(&p).map_err(io_err(&p))?;
    }
    let splits = assign_splits(cfg.count, &cfg.splits, cfg.master_seed);
    let work = || -> Result<Vec<(SceneRecord, AnnotationSet)>, PipelineError> {
        (0..cfg.count)
            .into_par_iter()
            .map(|i| build_one(cfg, &catalog, root, i, splits[i as usize]))
            .collect()
    };
    let built = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| PipelineError::Pool(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    log::info!("built {} scenes", built.len());

    let (records, sets): (Vec<SceneRecord>, Vec<AnnotationSet>) = built.into_iter().unzip();
    let names: Vec<&str> = records.iter().map(|r| r.split.as_str()).collect();
    let split_names: Vec<&str> = Split::ALL.iter().map(|s| s.as_str()).collect();
    let coco_dir = root.join("coco");
    export_coco(&sets, &names, &split_names, &catalog, &coco_dir)?;
    let coco_files = split_names
        .iter()
        .map(|s| {
            let rel = format!("coco/{}", split_file_name(s));
            let path = root.join(&rel);
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            Ok(FileRecord { path: rel, sha256: sha256_hex(&bytes) })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;

    let inputs: Vec<StatsInput> = records
        .iter()
        .zip(&sets)
        .map(|(r, s)| StatsInput { split: r.split, strip_length_mm: r.strip_length_mm, annotations: s })
        .collect();
    let stats = CorpusStats::compute(&inputs, &catalog)?;
    let mut split_sizes: BTreeMap<Split, u64> = Split::ALL.iter().map(|s| (*s, 0)).collect();
    for r in &records {
        *split_sizes.get_mut(&r.split).unwrap() += 1;
    }
    let manifest = DatasetManifest {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        split_sizes,
        scenes: records,
        coco_files,
        stats,
    };
    let path = root.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_json_string()).map_err(io_err(&path))?;
    Ok(manifest)
}
