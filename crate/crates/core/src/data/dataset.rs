use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ClassCatalog;
use crate::error::{Error, Result};
use crate::jsonl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Real,
    Generated,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Real => "real",
            Origin::Generated => "generated",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub sample_id: String,
    pub class_id: u32,
    pub uri: String,
}

/// A pool of images, real or generated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    dataset_tag: String,
    origin: Origin,
    entries: Vec<DatasetEntry>,
}

impl DatasetManifest {
    pub fn new(dataset_tag: impl Into<String>, origin: Origin, entries: Vec<DatasetEntry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert(e.sample_id.as_str()) {
                return Err(Error::DuplicateSampleId(e.sample_id.clone()));
            }
        }
        Ok(Self {
            dataset_tag: dataset_tag.into(),
            origin,
            entries,
        })
    }

    pub fn validate_classes(&self, catalog: &ClassCatalog) -> Result<()> {
        self.entries.iter().try_for_each(|e| catalog.check(e.class_id))
    }

    pub fn dataset_tag(&self) -> &str {
        &self.dataset_tag
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn entries(&self) -> &[DatasetEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    dataset_tag: String,
    origin: Origin,
}

/// First line is `{"dataset_tag", "origin"}`; each following line is one
/// entry `{"sample_id", "class_id", "uri"}`.
pub fn write_dataset_manifest(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    let mut text = jsonl::to_string([Header {
        dataset_tag: manifest.dataset_tag.clone(),
        origin: manifest.origin,
    }])?;
    text.push_str(&jsonl::to_string(&manifest.entries)?);
    jsonl::write_file(path, &text)
}

pub fn read_dataset_manifest(path: &Path) -> Result<DatasetManifest> {
    let mut lines = jsonl::read_lines(path)?.into_iter();
    let (n, first) = lines.next().ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        reason: "missing header line".into(),
    })?;
    let header: Header = jsonl::parse_line(path, n, &first)?;
    let entries = lines
        .map(|(n, l)| jsonl::parse_line(path, n, &l))
        .collect::<Result<Vec<DatasetEntry>>>()?;
    DatasetManifest::new(header.dataset_tag, header.origin, entries)
}
