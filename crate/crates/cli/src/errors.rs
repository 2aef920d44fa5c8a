use stripsynth::catalog::CatalogError;
use stripsynth::coco::CocoError;
use stripsynth::evalkit::io::DetectionsError;
use stripsynth::pipeline::PipelineError;
use stripsynth::scaleopt::labels::ScaleLabelError;
use stripsynth::scaleopt::rescale::RescaleError;
use stripsynth::scaleopt::{AdapterError, ScaleOptError};
use stripsynth::scenegen::SceneError;
use stripsynth::stripgen::GenerationError;
use thiserror::Error;

pub const VALIDATION: u8 = 1;
pub const RUNTIME: u8 = 2;

/// Bad user input detected by the CLI itself.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct Invalid(pub String);

fn catalog(e: &CatalogError) -> bool {
    !matches!(e, CatalogError::Io { .. })
}

fn coco(e: &CocoError) -> bool {
    !matches!(e, CocoError::Io { .. })
}

fn pipeline(e: &PipelineError) -> bool {
    match e {
        PipelineError::Config(_) | PipelineError::Corrupt { .. } | PipelineError::EmptyManifest => true,
        PipelineError::Catalog(c) => catalog(c),
        PipelineError::Scene { .. } => true,
        PipelineError::Coco(c) => coco(c),
        PipelineError::Io { .. } | PipelineError::Image { .. } | PipelineError::Pool(_) => false,
    }
}

/// `Some(true)` for bad input, `Some(false)` for runtime failures, `None`
/// for errors that only add context.
fn classify(e: &(dyn std::error::Error + 'static)) -> Option<bool> {
    if e.is::<Invalid>()
        || e.is::<DetectionsError>()
        || e.is::<RescaleError>()
        || e.is::<GenerationError>()
        || e.is::<SceneError>()
        || e.is::<ScaleLabelError>()
        || e.is::<serde_json::Error>()
    {
        return Some(true);
    }
    if let Some(e) = e.downcast_ref::<CatalogError>() {
        return Some(catalog(e));
    }
    if let Some(e) = e.downcast_ref::<CocoError>() {
        return Some(coco(e));
    }
    if let Some(e) = e.downcast_ref::<PipelineError>() {
        return Some(pipeline(e));
    }
    if let Some(e) = e.downcast_ref::<ScaleOptError>() {
        return Some(matches!(e, ScaleOptError::InvalidConfig(_)));
    }
    if e.is::<AdapterError>() || e.is::<std::io::Error>() {
        return Some(false);
    }
    None
}

/// The outermost recognised error decides; unrecognised chains are runtime
/// failures.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(classify) {
        Some(true) => VALIDATION,
        _ => RUNTIME,
    }
}
