use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::annotate::AnnotateConfig;
use crate::rng::CounterRng;
use crate::scenegen::SceneConfig;
use crate::stripgen::GenerationParams;

const FRACTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.79,
            val: 0.01,
            test: 0.20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Catalog file; the built-in reference catalog when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog: Option<PathBuf>,
    pub generation: GenerationParams,
    pub scene: SceneConfig,
    pub annotate: AnnotateConfig,
    pub count: u64,
    pub splits: SplitFractions,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    /// Worker threads; all cores when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Also write flat-shaded PNG previews.
    pub previews: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            catalog: None,
            generation: GenerationParams::default(),
            scene: SceneConfig::default(),
            annotate: AnnotateConfig::default(),
            count: 1000,
            splits: SplitFractions::default(),
            output_dir: PathBuf::from("dataset"),
            master_seed: 0,
            workers: None,
            previews: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.count == 0 {
            return bad("count must be at least 1".into());
        }
        let f = &self.splits;
        if [f.train, f.val, f.test].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("split fractions must be non-negative".into());
        }
        let sum = f.train + f.val + f.test;
        if (sum - 1.0).abs() > FRACTION_TOLERANCE {
            return bad(format!("split fractions must sum to 1, got {sum}"));
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        self.generation.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.scene.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(self.annotate.min_area_px.is_finite() && self.annotate.min_area_px >= 0.0) {
            return bad("min_area_px must be non-negative".into());
        }
        Ok(())
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<PipelineConfig, PipelineError> {
        let cfg: PipelineConfig = serde_json::from_slice(bytes).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// `[train, val, test]` sizes: val and test are floored, train takes the rest.
pub fn split_counts(count: u64, f: &SplitFractions) -> [u64; 3] {
    let floor = |x: f64| (x * count as f64 + FRACTION_TOLERANCE).floor() as u64;
    let val = floor(f.val).min(count);
    let test = floor(f.test).min(count - val);
    [count - val - test, val, test]
}

/// Split of every scene index. A seeded permutation of the indices is cut
/// into val, then test, then train.
pub fn assign_splits(count: u64, f: &SplitFractions, master_seed: u64) -> Vec<Split> {
    let [_, val, test] = split_counts(count, f);
    let mut order: Vec<u64> = (0..count).collect();
    CounterRng::stream(master_seed, u64::MAX).shuffle(&mut order);
    let mut out = vec![Split::Train; count as usize];
    for (rank, &i) in order.iter().enumerate() {
        let rank = rank as u64;
        if rank < val {
            out[i as usize] = Split::Val;
        } else if rank < val + test {
            out[i as usize] = Split::Test;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_split_sizes() {
        let f = SplitFractions::default();
        assert_eq!(split_counts(30_000, &f), [23_700, 300, 6_000]);
        assert_eq!(split_counts(100, &f), [79, 1, 20]);
        assert_eq!(split_counts(1, &f), [1, 0, 0]);
    }

    #[test]
    fn assignment_is_a_seeded_partition() {
        let f = SplitFractions::default();
        let a = assign_splits(1000, &f, 5);
        assert_eq!(a, assign_splits(1000, &f, 5));
        assert_ne!(a, assign_splits(1000, &f, 6));
        let n = |s| a.iter().filter(|&&x| x == s).count() as u64;
        assert_eq!([n(Split::Train), n(Split::Val), n(Split::Test)], split_counts(1000, &f));
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let mut c = PipelineConfig { count: 0, ..Default::default() };
        assert!(c.validate().is_err());
        c.count = 5;
        c.splits.train = 0.5;
        assert!(c.validate().is_err());
        assert!(PipelineConfig::from_json_slice(br#"{"count": 3, "bogus": 1}"#).is_err());
        let parsed = PipelineConfig::from_json_slice(br#"{"count": 3, "master_seed": 9}"#).unwrap();
        assert_eq!((parsed.count, parsed.master_seed), (3, 9));
        let back = PipelineConfig::from_json_slice(parsed.to_json_string().as_bytes()).unwrap();
        assert_eq!(back, parsed);
    }
}
