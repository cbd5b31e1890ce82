use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;

/// One classifier's (source, shifted) accuracy pair, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierPoint {
    pub classifier_id: String,
    pub source_accuracy: f64,
    pub shifted_accuracy: f64,
}

impl ClassifierPoint {
    pub fn new(classifier_id: impl Into<String>, source_accuracy: f64, shifted_accuracy: f64) -> Result<Self> {
        let p = Self {
            classifier_id: classifier_id.into(),
            source_accuracy,
            shifted_accuracy,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("source", self.source_accuracy), ("shifted", self.shifted_accuracy)] {
            if !v.is_finite() || !(0.0..=100.0).contains(&v) {
                return Err(Error::InvalidValue(format!(
                    "{} {name} accuracy {v} outside [0, 100]",
                    self.classifier_id
                )));
            }
        }
        Ok(())
    }
}

/// A zoo file line: a classifier point, optionally tagged with the shifted
/// dataset it was measured on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZooEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifted_tag: Option<String>,
    #[serde(flatten)]
    pub point: ClassifierPoint,
}

pub fn read_zoo(path: &Path) -> Result<Vec<ZooEntry>> {
    let lines = jsonl::read_lines(path)?;
    let mut out = Vec::with_capacity(lines.len());
    for (n, l) in lines {
        let entry: ZooEntry = jsonl::parse_line(path, n, &l)?;
        entry.point.validate().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: n,
            reason: e.to_string(),
        })?;
        out.push(entry);
    }
    Ok(out)
}

pub fn write_zoo(entries: &[ZooEntry], path: &Path) -> Result<()> {
    jsonl::write_file(path, &jsonl::to_string(entries)?)
}
