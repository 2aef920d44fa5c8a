//! Dataset builds: generate, annotate, split, export, plus the manifest and
//! corpus statistics.

mod build;
mod config;
mod stats;

pub use build::{build_dataset, scene_artifacts, DatasetManifest, FileRecord, PipelineError, SceneArtifacts, SceneRecord, MANIFEST_FILE};
pub use config::{assign_splits, split_counts, PipelineConfig, Split, SplitFractions};
pub use stats::{corpus_stats, ClassFrequency, CorpusStats, Summary, OVERREPRESENTED_FRACTION};
