//! Binary embedding payload plus line-delimited sidecar index.
//!
//! Payload layout, all little-endian:
//!
//! | offset | size | field                       |
//! |--------|------|-----------------------------|
//! | 0      | 4    | magic `GSEB`                |
//! | 4      | 4    | format version `u32` (= 1)  |
//! | 8      | 8    | row count `u64`             |
//! | 16     | 4    | dim `u32`                   |
//! | 20     | 1    | dtype `u8` (0 = f32)        |
//! | 21     | 3    | reserved, zero              |
//! | 24     | N·D·4| `f32` values, row-major     |
//!
//! The index lives at [`index_path`] and holds one JSON object per row, in
//! payload order, with `sample_id`, `class_id`, `dataset_tag` and `modality`.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ClassCatalog;
use crate::error::{Error, Result};
use crate::jsonl;

pub const MAGIC: &[u8; 4] = b"GSEB";
pub const FORMAT_VERSION: u32 = 1;
pub const DTYPE_F32: u8 = 0;
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    #[default]
    Image,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRow {
    pub sample_id: String,
    pub class_id: u32,
    pub vector: Vec<f32>,
}

/// `N × D` matrix of embeddings with per-row sample and class ids.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    dataset_tag: String,
    modality: Modality,
    sample_ids: Vec<String>,
    class_ids: Vec<u32>,
    /// Row-major, `sample_ids.len() * dim` values.
    values: Vec<f32>,
}

impl EmbeddingSet {
    pub fn new(
        dim: usize,
        dataset_tag: impl Into<String>,
        modality: Modality,
        rows: impl IntoIterator<Item = EmbeddingRow>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidValue("embedding dimension must be positive".into()));
        }
        let mut set = Self {
            dim,
            dataset_tag: dataset_tag.into(),
            modality,
            sample_ids: Vec::new(),
            class_ids: Vec::new(),
            values: Vec::new(),
        };
        for (i, row) in rows.into_iter().enumerate() {
            if row.vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    row: i,
                    expected: dim,
                    found: row.vector.len(),
                });
            }
            set.sample_ids.push(row.sample_id);
            set.class_ids.push(row.class_id);
            set.values.extend_from_slice(&row.vector);
        }
        set.validate()?;
        Ok(set)
    }

    /// Re-checks finiteness and id uniqueness.
    pub fn validate(&self) -> Result<()> {
        for (row, v) in self.rows().enumerate() {
            if let Some(column) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    row,
                    sample_id: self.sample_ids[row].clone(),
                    column,
                });
            }
        }
        let mut seen = HashSet::with_capacity(self.len());
        for id in &self.sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateSampleId(id.clone()));
            }
        }
        Ok(())
    }

    /// Checks every class id against `catalog`.
    pub fn validate_classes(&self, catalog: &ClassCatalog) -> Result<()> {
        self.class_ids.iter().try_for_each(|&c| catalog.check(c))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }

    pub fn dataset_tag(&self) -> &str {
        &self.dataset_tag
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn sample_id(&self, i: usize) -> &str {
        &self.sample_ids[i]
    }

    pub fn class_id(&self, i: usize) -> u32 {
        self.class_ids[i]
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn class_ids(&self) -> &[u32] {
        &self.class_ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Row indices grouped by class id, ascending; rows keep input order
    /// within each class.
    pub fn rows_by_class(&self) -> std::collections::BTreeMap<u32, Vec<usize>> {
        let mut by_class: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
        for (i, &c) in self.class_ids.iter().enumerate() {
            by_class.entry(c).or_default().push(i);
        }
        by_class
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexRecord {
    sample_id: String,
    class_id: u32,
    dataset_tag: String,
    modality: Modality,
}

/// Sidecar index location for a payload path: `<path>.index.jsonl`.
pub fn index_path(payload: &Path) -> PathBuf {
    let mut s: OsString = payload.as_os_str().to_owned();
    s.push(".index.jsonl");
    PathBuf::from(s)
}

pub(crate) fn encode_payload(set: &EmbeddingSet) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + set.values.len() * 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(set.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(set.dim as u32).to_le_bytes());
    buf.push(DTYPE_F32);
    buf.extend_from_slice(&[0u8; 3]);
    for v in &set.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

fn encode_index(set: &EmbeddingSet) -> Result<String> {
    jsonl::to_string(set.sample_ids.iter().zip(&set.class_ids).map(|(id, &c)| IndexRecord {
        sample_id: id.clone(),
        class_id: c,
        dataset_tag: set.dataset_tag.clone(),
        modality: set.modality,
    }))
}

/// Writes the payload to `path` and the index to [`index_path`]`(path)`.
pub fn write_embeddings(set: &EmbeddingSet, path: &Path) -> Result<()> {
    set.validate()?;
    let index = encode_index(set)?;
    fs::write(path, encode_payload(set)).map_err(|e| Error::io(path, e))?;
    jsonl::write_file(&index_path(path), &index)
}

struct Header {
    rows: u64,
    dim: u32,
}

fn decode_header(path: &Path, bytes: &[u8]) -> Result<Header> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: String::from_utf8_lossy(MAGIC).into_owned(),
            found: String::from_utf8_lossy(&bytes[0..4]).into_owned(),
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            path: path.to_path_buf(),
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let dim = u32::from_le_bytes(bytes[16..20].try_into().unwrap());
    if bytes[20] != DTYPE_F32 {
        return Err(Error::UnsupportedDtype(bytes[20]));
    }
    if bytes[21..24] != [0, 0, 0] {
        return Err(Error::BadHeader {
            path: path.to_path_buf(),
            reason: "reserved bytes are not zero".into(),
        });
    }
    if dim == 0 {
        return Err(Error::BadHeader {
            path: path.to_path_buf(),
            reason: "dimension is zero".into(),
        });
    }
    Ok(Header { rows, dim })
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingSet> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let header = decode_header(path, &bytes)?;
    let expected = (header.rows as u128) * (header.dim as u128) * 4 + HEADER_LEN as u128;
    if (bytes.len() as u128) < expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: expected.min(u64::MAX as u128) as u64,
            found: bytes.len() as u64,
        });
    }
    if (bytes.len() as u128) > expected {
        return Err(Error::BadHeader {
            path: path.to_path_buf(),
            reason: format!("{} trailing bytes after payload", bytes.len() as u128 - expected),
        });
    }

    let idx_path = index_path(path);
    let index: Vec<IndexRecord> = jsonl::read_records(&idx_path)?;
    if index.len() as u64 != header.rows {
        return Err(Error::RowCountMismatch {
            payload: header.rows,
            index: index.len() as u64,
        });
    }

    let (dataset_tag, modality) = index
        .first()
        .map(|r| (r.dataset_tag.clone(), r.modality))
        .unwrap_or_default();
    if let Some((line, r)) = index
        .iter()
        .enumerate()
        .find(|(_, r)| r.dataset_tag != dataset_tag || r.modality != modality)
    {
        return Err(Error::Parse {
            path: idx_path,
            line: line + 1,
            reason: format!(
                "row {:?} disagrees with the set's dataset tag or modality",
                r.sample_id
            ),
        });
    }

    let values: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let set = EmbeddingSet {
        dim: header.dim as usize,
        dataset_tag,
        modality,
        sample_ids: index.iter().map(|r| r.sample_id.clone()).collect(),
        class_ids: index.iter().map(|r| r.class_id).collect(),
        values,
    };
    set.validate()?;
    Ok(set)
}
