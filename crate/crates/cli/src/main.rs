//! `stripsynth` command-line front end.
//!
//! Exit codes: 0 success, 1 validation error (bad input, config or catalog),
//! 2 runtime error (I/O, detector failures). Logs go to stderr; machine
//! output goes to stdout or files.

mod commands;
mod errors;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "stripsynth", version, about = "Synthetic terminal-strip detection datasets")]
pub struct Cli {
    /// More log output on stderr (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

/// Pipeline config file plus the overrides shared by the generating commands.
#[derive(Debug, Args, Clone, Default)]
pub struct ConfigArgs {
    /// Pipeline config (JSON); flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Part catalog (JSON); defaults to the built-in reference catalog.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "STRIPSYNTH_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Catalog operations.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Write scene specs `scene_{index}.json`.
    Generate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        count: Option<u64>,
        #[arg(long, env = "STRIPSYNTH_OUT")]
        out: Option<PathBuf>,
    },
    /// Annotate every `scene_*.json` in a directory.
    Annotate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long, env = "STRIPSYNTH_OUT")]
        out: Option<PathBuf>,
    },
    /// Split annotation files and write `instances_{train,val,test}.json`.
    ExportCoco {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long, env = "STRIPSYNTH_OUT")]
        out: Option<PathBuf>,
    },
    /// Generate, annotate, split and export a full dataset with manifest.
    Build {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        count: Option<u64>,
        #[arg(long, env = "STRIPSYNTH_OUT")]
        out: Option<PathBuf>,
        /// Also write debug preview PNGs.
        #[arg(long)]
        previews: bool,
    },
    /// Corpus statistics of a built dataset.
    Stats {
        /// `manifest.json` or the dataset directory.
        manifest: PathBuf,
    },
    /// Score detections against COCO ground truth.
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        dets: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
        #[arg(long, default_value_t = 0.5)]
        score: f64,
        /// Apply class-wise NMS at this IoU before scoring.
        #[arg(long)]
        nms: Option<f64>,
        /// JSON report path.
        #[arg(long, default_value = "eval_report.json")]
        report: PathBuf,
    },
    /// Per-image search for the preprocessing scale that maximizes F1.
    ScaleOpt {
        /// COCO ground truth of the images.
        #[arg(long)]
        gt: PathBuf,
        /// Shell command speaking the detector adapter protocol.
        #[arg(long)]
        detector_cmd: String,
        /// Directory holding the images named in the ground truth.
        #[arg(long)]
        images: PathBuf,
        /// Search settings (JSON); defaults otherwise.
        #[arg(long)]
        search_config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "STRIPSYNTH_OUT")]
        out: Option<PathBuf>,
        #[arg(long, env = "STRIPSYNTH_WORKERS")]
        workers: Option<usize>,
    },
    /// Scenes with known scale labels for training a scale regressor.
    ScaleLabels {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 1000)]
        count: u64,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.5, 2.0])]
        range: Vec<f64>,
        #[arg(long, env = "STRIPSYNTH_OUT")]
        out: Option<PathBuf>,
    },
    /// Debug rendering of one scene.
    Preview {
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        scene: PathBuf,
        /// Draw these ground-truth boxes on top.
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Constant-factor rescale of ground truth (and optionally detections).
    Rescale {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = 1.5)]
        factor: f64,
        #[arg(long)]
        dets: Option<PathBuf>,
        #[arg(long, env = "STRIPSYNTH_OUT")]
        out: Option<PathBuf>,
    },
    /// Synthetic detector with a planted optimal scale; speaks the adapter
    /// protocol on stdin/stdout.
    OracleDetector {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = 1.5)]
        optimum: f64,
        #[arg(long, default_value_t = 0.3)]
        width: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
enum CatalogAction {
    /// Validate a catalog; prints diagnostics as JSON.
    Validate { path: PathBuf },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    use commands::*;
    match cli.command {
        Command::Catalog { action: CatalogAction::Validate { path } } => catalog_validate(&path),
        Command::Generate { cfg, count, out } => generate(&cfg, count, out),
        Command::Annotate { cfg, scenes, out } => annotate(&cfg, &scenes, out),
        Command::ExportCoco { cfg, annotations, out } => export_coco(&cfg, &annotations, out),
        Command::Build { cfg, count, out, previews } => build(&cfg, count, out, previews),
        Command::Stats { manifest } => stats(&manifest),
        Command::Eval { gt, dets, iou, score, nms, report } => eval(&gt, &dets, iou, score, nms, &report),
        Command::ScaleOpt { gt, detector_cmd, images, search_config, seed, out, workers } => {
            scale_opt(&gt, &detector_cmd, &images, search_config.as_deref(), seed, out, workers)
        }
        Command::ScaleLabels { cfg, count, range, out } => scale_labels(&cfg, count, [range[0], range[1]], out),
        Command::Preview { catalog, scene, annotations, out } => {
            preview(catalog.as_deref(), &scene, annotations.as_deref(), &out)
        }
        Command::Rescale { gt, factor, dets, out } => rescale(&gt, factor, dets.as_deref(), out),
        Command::OracleDetector { gt, optimum, width, seed } => oracle_detector(&gt, optimum, width, seed),
    }
}

/// The error chain joined by `: `, skipping causes the outer messages
/// already quote.
fn message(err: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in err.chain() {
        let part = cause.to_string();
        if !text.contains(&part) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&part);
        }
    }
    text
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(errors::VALIDATION) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", message(&e));
            ExitCode::from(errors::exit_code(&e))
        }
    }
}
