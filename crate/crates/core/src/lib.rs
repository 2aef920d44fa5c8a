//! Synthetic terminal-strip dataset toolkit: seeded strip and scene
//! generation, analytic ground truth, COCO export, detection metrics and a
//! per-image scale search.

pub mod annotate;
pub mod bbox;
pub mod camera;
pub mod catalog;
pub mod coco;
pub mod evalkit;
pub mod geometry;
pub mod pipeline;
pub mod preview;
pub mod rng;
pub mod scaleopt;
pub mod scenegen;
pub mod stripgen;
