//! Image-text similarity filtering against per-class proxy captions.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::EmbeddingSet;
use crate::error::{Error, Result};
use crate::jsonl;

pub const DEFAULT_THRESHOLD: f64 = 0.3;
pub const DEFAULT_CAPTION_TEMPLATE: &str = "a photo of a {class label}";

/// `u·v / (‖u‖‖v‖)` accumulated in f64.
pub fn cosine_similarity(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            row: 0,
            expected: u.len(),
            found: v.len(),
        });
    }
    let (mut dot, mut nu, mut nv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a as f64, b as f64);
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm("cosine similarity operand".into()));
    }
    Ok(dot / (nu.sqrt() * nv.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removed {
    pub sample_id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    pub kept: Vec<String>,
    pub removed: Vec<Removed>,
    pub threshold: f64,
    pub caption_template: String,
}

#[derive(Serialize, Deserialize)]
struct Summary {
    kept_count: usize,
    removed_count: usize,
    threshold: f64,
    caption_template: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
enum Line {
    Kept { sample_id: String },
    Removed { sample_id: String, similarity: f64 },
}

impl FilterReport {
    /// Summary header line, then kept ids, then removed ids with similarity.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = jsonl::to_string([Summary {
            kept_count: self.kept.len(),
            removed_count: self.removed.len(),
            threshold: self.threshold,
            caption_template: self.caption_template.clone(),
        }])?;
        out.push_str(&jsonl::to_string(
            self.kept
                .iter()
                .map(|id| Line::Kept { sample_id: id.clone() })
                .chain(self.removed.iter().map(|r| Line::Removed {
                    sample_id: r.sample_id.clone(),
                    similarity: r.similarity,
                })),
        )?);
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        jsonl::write_file(path, &self.to_jsonl()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut lines = jsonl::read_lines(path)?.into_iter();
        let (n, first) = lines.next().ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: "missing summary line".into(),
        })?;
        let summary: Summary = jsonl::parse_line(path, n, &first)?;
        let mut report = FilterReport {
            kept: Vec::with_capacity(summary.kept_count),
            removed: Vec::with_capacity(summary.removed_count),
            threshold: summary.threshold,
            caption_template: summary.caption_template,
        };
        for (n, l) in lines {
            match jsonl::parse_line(path, n, &l)? {
                Line::Kept { sample_id } => report.kept.push(sample_id),
                Line::Removed { sample_id, similarity } => report.removed.push(Removed { sample_id, similarity }),
            }
        }
        Ok(report)
    }
}

/// Keeps an image iff its similarity to its class caption is at least
/// `threshold`; anything strictly below is removed.
///
/// `captions` must hold exactly one row per class that occurs in `images`.
pub fn filter_by_caption(
    images: &EmbeddingSet,
    captions: &EmbeddingSet,
    threshold: f64,
    caption_template: &str,
) -> Result<FilterReport> {
    if !threshold.is_finite() {
        return Err(Error::InvalidValue(format!("threshold must be finite, got {threshold}")));
    }
    let mut by_class: BTreeMap<u32, usize> = BTreeMap::new();
    for i in 0..captions.len() {
        if by_class.insert(captions.class_id(i), i).is_some() {
            return Err(Error::DuplicateCaption(captions.class_id(i)));
        }
    }
    if !images.is_empty() && images.dim() != captions.dim() {
        return Err(Error::InvalidValue(format!(
            "image dimension {} differs from caption dimension {}",
            images.dim(),
            captions.dim()
        )));
    }

    let sims: Vec<f64> = (0..images.len())
        .into_par_iter()
        .map(|i| {
            let class_id = images.class_id(i);
            let c = *by_class.get(&class_id).ok_or(Error::MissingCaption(class_id))?;
            cosine_similarity(images.row(i), captions.row(c))
                .map_err(|_| Error::ZeroNorm(format!("sample {} or caption of class {class_id}", images.sample_id(i))))
        })
        .collect::<Result<_>>()?;

    let mut report = FilterReport {
        kept: Vec::new(),
        removed: Vec::new(),
        threshold,
        caption_template: caption_template.to_string(),
    };
    for (i, sim) in sims.into_iter().enumerate() {
        let id = images.sample_id(i).to_string();
        if sim < threshold {
            report.removed.push(Removed {
                sample_id: id,
                similarity: sim,
            });
        } else {
            report.kept.push(id);
        }
    }
    Ok(report)
}
