use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;

/// Ordered class list of one dataset. Ids are dense in `0..K`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCatalog {
    dataset_tag: String,
    /// Indexed by class id.
    names: Vec<String>,
}

impl ClassCatalog {
    /// Builds a catalog from `(class_id, name)` pairs in any order.
    pub fn new(
        dataset_tag: impl Into<String>,
        classes: impl IntoIterator<Item = (u32, String)>,
    ) -> Result<Self> {
        let mut pairs: Vec<(u32, String)> = classes.into_iter().collect();
        pairs.sort_by_key(|(id, _)| *id);
        let mut seen = HashSet::new();
        for (expected, (id, name)) in pairs.iter().enumerate() {
            if *id as usize != expected {
                return Err(Error::InvalidCatalog(format!(
                    "class ids must be unique and dense in [0, {}); found {id} at position {expected}",
                    pairs.len()
                )));
            }
            if name.trim().is_empty() {
                return Err(Error::InvalidCatalog(format!("class {id} has an empty name")));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidCatalog(format!("duplicate class name {name:?}")));
            }
        }
        Ok(Self {
            dataset_tag: dataset_tag.into(),
            names: pairs.into_iter().map(|(_, n)| n).collect(),
        })
    }

    /// Catalog whose ids follow the order of `names`.
    pub fn from_names<S: Into<String>>(
        dataset_tag: impl Into<String>,
        names: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        Self::new(
            dataset_tag,
            names.into_iter().enumerate().map(|(i, n)| (i as u32, n.into())),
        )
    }

    pub fn dataset_tag(&self) -> &str {
        &self.dataset_tag
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, class_id: u32) -> bool {
        (class_id as usize) < self.names.len()
    }

    pub fn name(&self, class_id: u32) -> Option<&str> {
        self.names.get(class_id as usize).map(String::as_str)
    }

    pub fn check(&self, class_id: u32) -> Result<()> {
        if self.contains(class_id) {
            Ok(())
        } else {
            Err(Error::UnknownClass(class_id))
        }
    }

    /// `(class_id, name)` in id order.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = (u32, &str)> + '_ {
        self.names.iter().enumerate().map(|(i, n)| (i as u32, n.as_str()))
    }
}

const TAG_PREFIX: &str = "# dataset_tag:";

/// Tab-separated `class_id<TAB>class_name` lines. An optional leading
/// `# dataset_tag: <tag>` comment names the dataset; otherwise the file stem
/// is used.
pub fn read_catalog(path: &Path) -> Result<ClassCatalog> {
    let mut tag = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut classes = Vec::new();
    for (line_no, line) in jsonl::read_lines(path)? {
        if let Some(rest) = line.strip_prefix(TAG_PREFIX) {
            tag = rest.trim().to_string();
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            reason,
        };
        let (id, name) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected `class_id<TAB>class_name`".into()))?;
        let id: u32 = id
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("bad class id {id:?}: {e}")))?;
        classes.push((id, name.trim().to_string()));
    }
    ClassCatalog::new(tag, classes)
}

pub fn write_catalog(catalog: &ClassCatalog, path: &Path) -> Result<()> {
    let mut out = format!("{TAG_PREFIX} {}\n", catalog.dataset_tag());
    for (id, name) in catalog.iter() {
        let _ = writeln!(out, "{id}\t{name}");
    }
    jsonl::write_file(path, &out)
}
