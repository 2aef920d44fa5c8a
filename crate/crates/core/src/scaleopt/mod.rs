//! Scale-factor tools: constant rescaling, scale-labeled scenes and the
//! per-image Gaussian-process search over the rescaling factor.

pub mod adapter;
pub mod bayes;
pub mod gp;
pub mod labels;
pub mod oracle;
pub mod rescale;

pub use adapter::{AdapterError, CommandAdapter, DetectorAdapter};
pub use bayes::{expected_improvement, optimize_scale, optimize_with, ScaleOptError, ScaleOptResult, ScaleSearchConfig, TracePoint};
pub use gp::{gp_fit_predict, GaussianProcess, GpConfig};
pub use labels::{generate_scale_labels, ScaleLabel};
pub use oracle::{OracleDetector, OracleParams};
pub use rescale::{constant_rescale, scale_box};
