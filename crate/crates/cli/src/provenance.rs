use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const FILE_NAME: &str = "provenance.jsonl";

/// Files a command read and wrote.
#[derive(Debug, Default)]
pub struct Touched {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl Touched {
    pub fn new(inputs: impl IntoIterator<Item = PathBuf>, outputs: impl IntoIterator<Item = PathBuf>) -> Self {
        Self {
            inputs: inputs.into_iter().collect(),
            outputs: outputs.into_iter().collect(),
        }
    }
}

#[derive(Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Record<'a> {
    tool: &'static str,
    version: &'static str,
    command: String,
    args: &'a [String],
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

fn digest(path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Appends one record to `provenance.jsonl` in the directory of the first
/// output. Returns the provenance file path.
pub fn append(command: &[String], args: &[String], touched: &Touched) -> Result<Option<PathBuf>> {
    let Some(first) = touched.outputs.first() else {
        return Ok(None);
    };
    let dir = match first.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let record = Record {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: command.join(" "),
        args,
        inputs: touched.inputs.iter().map(|p| digest(p)).collect::<Result<_>>()?,
        outputs: touched.outputs.iter().map(|p| digest(p)).collect::<Result<_>>()?,
    };
    let path = dir.join(FILE_NAME);
    let mut line = serde_json::to_string(&record)?;
    line.push('\n');
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .and_then(|mut f| f.write_all(line.as_bytes()))
        .with_context(|| format!("appending to {}", path.display()))?;
    Ok(Some(path))
}
