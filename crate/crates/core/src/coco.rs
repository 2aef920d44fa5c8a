// COCO object-detection JSON
// https://cocodataset.org/#format-data

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::AnnotationSet;
use crate::bbox::Box2D;
use crate::catalog::Catalog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoInfo {
    pub description: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u32,
    pub bbox: [f64; 4], // [x, y, width, height]
    pub area: f64,
    pub iscrowd: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: u32,
    pub name: String,
    pub supercategory: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoDataset {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info: Option<CocoInfo>,
    pub images: Vec<CocoImage>,
    pub annotations: Vec<CocoAnnotation>,
    pub categories: Vec<CocoCategory>,
}

/// One image's ground truth in 0-based class ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGroundTruth {
    pub image_id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    pub objects: Vec<(u32, Box2D)>,
}

#[derive(Debug, Error)]
pub enum CocoError {
    #[error("corpus is empty")]
    Empty,
    #[error("duplicate scene id {0}")]
    DuplicateScene(u64),
    #[error("annotation {annotation} references unknown {what} {id}")]
    Dangling { annotation: u64, what: &'static str, id: u64 },
    #[error("category id 0 is reserved (categories are 1-based)")]
    ZeroCategory,
    #[error("invalid bbox in annotation {0}")]
    BadBox(u64),
    #[error("COCO parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Conventional image file name of a scene.
pub fn image_file_name(scene_id: u64) -> String {
    format!("scene_{scene_id}.png")
}

/// Categories from the catalog; COCO ids are `class_id + 1`.
pub fn categories(catalog: &Catalog) -> Vec<CocoCategory> {
    catalog
        .classes()
        .iter()
        .map(|p| CocoCategory {
            id: p.class_id.unwrap() + 1,
            name: p.part_id.clone(),
            supercategory: p.kind.to_string(),
        })
        .collect()
}

/// Builds a COCO dataset; images keep scene ids, annotation ids run from 1
/// in input order.
pub fn coco_dataset(sets: &[&AnnotationSet], catalog: &Catalog) -> Result<CocoDataset, CocoError> {
    let mut seen = HashSet::new();
    let mut images = Vec::with_capacity(sets.len());
    let mut annotations = Vec::new();
    for set in sets {
        if !seen.insert(set.scene_id) {
            return Err(CocoError::DuplicateScene(set.scene_id));
        }
        images.push(CocoImage {
            id: set.scene_id,
            file_name: image_file_name(set.scene_id),
            width: set.image_width,
            height: set.image_height,
        });
        for o in &set.objects {
            annotations.push(CocoAnnotation {
                id: annotations.len() as u64 + 1,
                image_id: set.scene_id,
                category_id: o.class_id + 1,
                bbox: o.bbox.to_xywh(),
                area: o.bbox.area(),
                iscrowd: 0,
            });
        }
    }
    Ok(CocoDataset {
        info: Some(CocoInfo {
            description: "synthetic terminal strips".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }),
        images,
        annotations,
        categories: categories(catalog),
    })
}

/// File name of a split's instances file.
pub fn split_file_name(split: &str) -> String {
    format!("instances_{split}.json")
}

/// Writes `instances_{split}.json` for each named split of the corpus.
/// `assignment[i]` names the split of `sets[i]`; every split in `splits` is
/// written, even when empty.
pub fn export_coco(
    sets: &[AnnotationSet],
    assignment: &[&str],
    splits: &[&str],
    catalog: &Catalog,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CocoError> {
    if sets.is_empty() {
        return Err(CocoError::Empty);
    }
    assert_eq!(sets.len(), assignment.len());
    let mut seen = HashSet::new();
    for s in sets {
        if !seen.insert(s.scene_id) {
            return Err(CocoError::DuplicateScene(s.scene_id));
        }
    }
    fs::create_dir_all(out_dir).map_err(|source| CocoError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for split in splits {
        let members: Vec<&AnnotationSet> = sets
            .iter()
            .zip(assignment)
            .filter(|(_, a)| *a == split)
            .map(|(s, _)| s)
            .collect();
        let ds = coco_dataset(&members, catalog)?;
        let path = out_dir.join(split_file_name(split));
        fs::write(&path, ds.to_json_string()).map_err(|source| CocoError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

impl CocoDataset {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("COCO serializes")
    }

    /// Parses and checks references.
    pub fn from_json_slice(bytes: &[u8]) -> Result<CocoDataset, CocoError> {
        let ds: CocoDataset = serde_json::from_slice(bytes)?;
        ds.validate()?;
        Ok(ds)
    }

    pub fn read(path: &Path) -> Result<CocoDataset, CocoError> {
        let bytes = fs::read(path).map_err(|source| CocoError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        CocoDataset::from_json_slice(&bytes)
    }

    pub fn validate(&self) -> Result<(), CocoError> {
        let images: HashSet<u64> = self.images.iter().map(|i| i.id).collect();
        let cats: HashSet<u32> = self.categories.iter().map(|c| c.id).collect();
        if cats.contains(&0) {
            return Err(CocoError::ZeroCategory);
        }
        for a in &self.annotations {
            if !images.contains(&a.image_id) {
                return Err(CocoError::Dangling { annotation: a.id, what: "image", id: a.image_id });
            }
            if !cats.contains(&a.category_id) {
                return Err(CocoError::Dangling { annotation: a.id, what: "category", id: a.category_id as u64 });
            }
            if !Box2D::from_xywh(a.bbox).is_well_formed() {
                return Err(CocoError::BadBox(a.id));
            }
        }
        Ok(())
    }

    /// Number of 0-based classes: the largest category id.
    pub fn class_count(&self) -> usize {
        self.categories.iter().map(|c| c.id as usize).max().unwrap_or(0)
    }

    /// Per-image ground truth with 0-based classes, sorted by image id.
    pub fn ground_truth(&self) -> Vec<ImageGroundTruth> {
        let mut by_image: BTreeMap<u64, ImageGroundTruth> = self
            .images
            .iter()
            .map(|i| {
                (
                    i.id,
                    ImageGroundTruth {
                        image_id: i.id,
                        file_name: i.file_name.clone(),
                        width: i.width,
                        height: i.height,
                        objects: Vec::new(),
                    },
                )
            })
            .collect();
        for a in &self.annotations {
            if let Some(img) = by_image.get_mut(&a.image_id) {
                img.objects.push((a.category_id.saturating_sub(1), Box2D::from_xywh(a.bbox)));
            }
        }
        by_image.into_values().collect()
    }
}
