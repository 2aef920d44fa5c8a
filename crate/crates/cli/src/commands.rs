use std::fs;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use stripsynth::annotate::{annotate_scene, AnnotationSet};
use stripsynth::catalog::{load_catalog, Catalog, CatalogError};
use stripsynth::coco::{self, CocoDataset};
use stripsynth::evalkit::io::{detections_to_json, gt_boxes, parse_detections};
use stripsynth::evalkit::{evaluate, nms, EvalConfig, EvalResult, GtBox};
use stripsynth::pipeline::{assign_splits, build_dataset, corpus_stats, PipelineConfig, Split, MANIFEST_FILE};
use stripsynth::preview::{render_scene, write_png};
use stripsynth::rng::derive_seed;
use stripsynth::scaleopt::adapter::parse_request;
use stripsynth::scaleopt::rescale::{scale_coco, scale_detections};
use stripsynth::scaleopt::{
    constant_rescale, generate_scale_labels, optimize_scale, CommandAdapter, OracleDetector, OracleParams,
    ScaleSearchConfig,
};
use stripsynth::scenegen::{generate_scene, SceneSpec};

use crate::errors::Invalid;
use crate::ConfigArgs;

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    emit(&(serde_json::to_string_pretty(value)? + "\n"))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("cannot create {}", path.display()))
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

fn load_config(args: &ConfigArgs) -> Result<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(p) => PipelineConfig::from_json_slice(&read(p)?).with_context(|| format!("config {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(c) = &args.catalog {
        cfg.catalog = Some(c.clone());
    }
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn catalog_of(path: Option<&Path>) -> Result<Catalog> {
    Ok(match path {
        Some(p) => load_catalog(p)?,
        None => Catalog::reference(),
    })
}

/// `(index, path)` of every `scene_{index}.json` in `dir`, by index.
fn scene_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(i) = name.strip_prefix("scene_").and_then(|r| r.strip_suffix(".json")).and_then(|i| i.parse().ok()) {
            out.push((i, path));
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Invalid(format!("no scene_*.json files in {}", dir.display())).into());
    }
    Ok(out)
}

#[derive(Serialize)]
struct Validation {
    valid: bool,
    terminal_blocks: usize,
    classes: usize,
    issues: Vec<serde_json::Value>,
}

pub fn catalog_validate(path: &Path) -> Result<()> {
    let report = match load_catalog(path) {
        Ok(c) => Validation {
            valid: true,
            terminal_blocks: c.terminal_blocks().len(),
            classes: c.class_count(),
            issues: Vec::new(),
        },
        Err(e @ CatalogError::Io { .. }) => return Err(e.into()),
        Err(e) => {
            let issues = match &e {
                CatalogError::Invalid(list) => list.iter().map(serde_json::to_value).collect::<Result<_, _>>()?,
                other => vec![serde_json::json!({ "part_id": null, "message": other.to_string() })],
            };
            print_json(&Validation { valid: false, terminal_blocks: 0, classes: 0, issues })?;
            return Err(e.into());
        }
    };
    print_json(&report)
}

#[derive(Serialize)]
struct Written {
    count: usize,
    out: PathBuf,
}

pub fn generate(args: &ConfigArgs, count: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = load_config(args)?;
    if let Some(n) = count {
        cfg.count = n;
    }
    cfg.validate()?;
    let catalog = catalog_of(cfg.catalog.as_deref())?;
    let out = out.unwrap_or_else(|| PathBuf::from("scenes"));
    create_dir(&out)?;
    pool(cfg.workers)?.install(|| {
        (0..cfg.count).into_par_iter().try_for_each(|i| -> Result<()> {
            let scene = generate_scene(&catalog, &cfg.generation, &cfg.scene, cfg.master_seed, i)
                .with_context(|| format!("scene {i}"))?;
            write(&out.join(format!("scene_{i}.json")), scene.to_json_string())
        })
    })?;
    log::info!("wrote {} scenes to {}", cfg.count, out.display());
    print_json(&Written { count: cfg.count as usize, out })
}

pub fn annotate(args: &ConfigArgs, scenes: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = load_config(args)?;
    let catalog = catalog_of(cfg.catalog.as_deref())?;
    let files = scene_files(scenes)?;
    let out = out.unwrap_or_else(|| PathBuf::from("annotations"));
    create_dir(&out)?;
    pool(cfg.workers)?.install(|| {
        files.par_iter().try_for_each(|(i, path)| -> Result<()> {
            let scene = SceneSpec::from_json_slice(&read(path)?).with_context(|| format!("{}", path.display()))?;
            let set = annotate_scene(&scene, &catalog, &cfg.annotate);
            write(&out.join(format!("scene_{i}.json")), set.to_json_string())
        })
    })?;
    print_json(&Written { count: files.len(), out })
}

pub fn export_coco(args: &ConfigArgs, annotations: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = load_config(args)?;
    let catalog = catalog_of(cfg.catalog.as_deref())?;
    let sets = scene_files(annotations)?
        .into_iter()
        .map(|(_, p)| AnnotationSet::from_json_slice(&read(&p)?).with_context(|| format!("{}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let splits = assign_splits(sets.len() as u64, &cfg.splits, cfg.master_seed);
    let names: Vec<&str> = splits.iter().map(|s| s.as_str()).collect();
    let split_names: Vec<&str> = Split::ALL.iter().map(|s| s.as_str()).collect();
    let out = out.unwrap_or_else(|| PathBuf::from("coco"));
    create_dir(&out)?;
    let files = coco::export_coco(&sets, &names, &split_names, &catalog, &out)?;
    print_json(&files)
}

pub fn build(args: &ConfigArgs, count: Option<u64>, out: Option<PathBuf>, previews: bool) -> Result<()> {
    let mut cfg = load_config(args)?;
    if let Some(n) = count {
        cfg.count = n;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    cfg.previews |= previews;
    let manifest = build_dataset(&cfg)?;
    log::info!("manifest written to {}", cfg.output_dir.join(MANIFEST_FILE).display());
    print_json(&manifest.stats)
}

pub fn stats(manifest: &Path) -> Result<()> {
    let path = if manifest.is_dir() { manifest.join(MANIFEST_FILE) } else { manifest.to_path_buf() };
    print_json(&corpus_stats(&path)?)
}

fn print_table(ds: &CocoDataset, r: &EvalResult) -> Result<()> {
    let name = |class: u32| {
        ds.categories
            .iter()
            .find(|c| c.id == class + 1)
            .map(|c| c.name.clone())
            .unwrap_or_else(|| format!("class {class}"))
    };
    let mut t = String::new();
    writeln!(t, "{:<28} {:>8} {:>10}", "class", "AP50", "AP50:95")?;
    for c in &r.per_class_ap {
        let mean = c.ap.iter().sum::<f64>() / c.ap.len().max(1) as f64;
        writeln!(t, "{:<28} {:>8.4} {:>10.4}", name(c.class_id), c.ap[0], mean)?;
    }
    writeln!(t, "{:<28} {:>8.4} {:>10.4}", "mAP", r.map_50, r.map_5095)?;
    writeln!(t, "precision {:.4}  recall {:.4}  F1 {:.4}", r.precision, r.recall, r.f1)?;
    for w in &r.warnings {
        writeln!(t, "warning: {w}")?;
    }
    emit(&t)
}

pub fn eval(gt: &Path, dets: &Path, iou: f64, score: f64, nms_iou: Option<f64>, report: &Path) -> Result<()> {
    for (flag, v) in [("--iou", iou), ("--score", score), ("--nms", nms_iou.unwrap_or(0.5))] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Invalid(format!("{flag} must lie in [0, 1], got {v}")).into());
        }
    }
    let ds = CocoDataset::read(gt)?;
    let mut detections = parse_detections(&read(dets)?).with_context(|| format!("{}", dets.display()))?;
    if let Some(t) = nms_iou {
        detections = nms(&detections, t);
    }
    let gts = gt_boxes(&ds);
    let num_classes = ds.class_count();
    let result = evaluate(&detections, &gts, num_classes, &EvalConfig { iou_threshold: iou, score_threshold: score });
    write(report, serde_json::to_string_pretty(&result)?)?;
    print_table(&ds, &result)?;
    log::info!("report written to {}", report.display());
    Ok(())
}

#[derive(Serialize)]
struct SearchSummary {
    image: String,
    best_scale: f64,
    best_f1: f64,
    result_file: PathBuf,
}

pub fn scale_opt(
    gt: &Path,
    cmd: &str,
    images: &Path,
    search_config: Option<&Path>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    workers: Option<usize>,
) -> Result<()> {
    let ds = CocoDataset::read(gt)?;
    let mut cfg = match search_config {
        Some(p) => serde_json::from_slice::<ScaleSearchConfig>(&read(p)?).with_context(|| format!("{}", p.display()))?,
        None => ScaleSearchConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let out = out.unwrap_or_else(|| PathBuf::from("scale_opt"));
    create_dir(&out)?;
    let all = gt_boxes(&ds);
    let summaries = pool(workers)?.install(|| {
        ds.images
            .par_iter()
            .map(|img| -> Result<SearchSummary> {
                let gts: Vec<GtBox> = all.iter().filter(|g| g.image_id == img.id).copied().collect();
                let path = images.join(&img.file_name);
                let image = path.to_string_lossy().into_owned();
                let mut adapter = CommandAdapter::new(cmd);
                let result = optimize_scale(&image, &mut adapter, &gts, &cfg).with_context(|| image.clone())?;
                let stem = Path::new(&img.file_name).file_stem().unwrap_or_default().to_string_lossy().into_owned();
                let file = out.join(format!("{stem}.json"));
                write(&file, serde_json::to_string_pretty(&result)?)?;
                Ok(SearchSummary { image, best_scale: result.best_scale, best_f1: result.best_f1, result_file: file })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    print_json(&summaries)
}

pub fn scale_labels(args: &ConfigArgs, count: u64, range: [f64; 2], out: Option<PathBuf>) -> Result<()> {
    let cfg = load_config(args)?;
    let catalog = catalog_of(cfg.catalog.as_deref())?;
    let labeled = generate_scale_labels(&catalog, &cfg.generation, &cfg.scene, count, range, cfg.master_seed)?;
    let out = out.unwrap_or_else(|| PathBuf::from("scale_labels"));
    create_dir(&out)?;
    for (label, scene) in &labeled {
        write(&out.join(format!("scene_{}.json", label.scene_id)), scene.to_json_string())?;
    }
    let labels: Vec<_> = labeled.iter().map(|(l, _)| *l).collect();
    write(&out.join("labels.json"), serde_json::to_string_pretty(&labels)?)?;
    print_json(&Written { count: labels.len(), out })
}

pub fn preview(catalog: Option<&Path>, scene: &Path, annotations: Option<&Path>, out: &Path) -> Result<()> {
    let catalog = catalog_of(catalog)?;
    let scene = SceneSpec::from_json_slice(&read(scene)?).with_context(|| format!("{}", scene.display()))?;
    let set = match annotations {
        Some(p) => Some(AnnotationSet::from_json_slice(&read(p)?).with_context(|| format!("{}", p.display()))?),
        None => None,
    };
    write_png(&render_scene(&scene, &catalog, set.as_ref()), out).with_context(|| format!("{}", out.display()))
}

pub fn rescale(gt: &Path, factor: f64, dets: Option<&Path>, out: Option<PathBuf>) -> Result<()> {
    let ds = CocoDataset::read(gt)?;
    let scaled = scale_coco(&ds, factor)?;
    let names: Vec<String> = ds.images.iter().map(|i| i.file_name.clone()).collect();
    let manifest = constant_rescale(&names, factor)?;
    let out = out.unwrap_or_else(|| PathBuf::from("rescaled"));
    create_dir(&out)?;
    write(&out.join("instances.json"), scaled.to_json_string())?;
    write(&out.join("rescale_manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    if let Some(p) = dets {
        let d = parse_detections(&read(p)?).with_context(|| format!("{}", p.display()))?;
        write(&out.join("results.json"), detections_to_json(&scale_detections(&d, factor)?))?;
    }
    print_json(&Written { count: names.len(), out })
}

pub fn oracle_detector(gt: &Path, optimum: f64, width: f64, seed: u64) -> Result<()> {
    let mut input = Vec::new();
    std::io::stdin().read_to_end(&mut input)?;
    let request = parse_request(&input).map_err(|e| Invalid(e.to_string()))?;
    let ds = CocoDataset::read(gt)?;
    let wanted = Path::new(&request.image).file_name().unwrap_or_default().to_string_lossy().into_owned();
    let image = ds
        .images
        .iter()
        .find(|i| i.file_name == request.image || i.file_name == wanted)
        .ok_or_else(|| Invalid(format!("image `{}` is not in {}", request.image, gt.display())))?;
    let gts: Vec<GtBox> = gt_boxes(&ds).into_iter().filter(|g| g.image_id == image.id).collect();
    let params = OracleParams { optimum, width, seed: derive_seed(seed, image.id), ..Default::default() };
    let detector = OracleDetector::new(gts, params);
    emit(&(detections_to_json(&detector.detections(request.scale)) + "\n"))
}
