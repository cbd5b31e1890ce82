use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::ClassCatalog;
use crate::error::{Error, Result};
use crate::jsonl;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub true_class: u32,
    pub pred_class: u32,
}

/// Predictions of one classifier on one dataset.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PredictionLog {
    classifier_id: String,
    dataset_tag: String,
    records: Vec<PredictionRecord>,
}

impl PredictionLog {
    pub fn new(
        classifier_id: impl Into<String>,
        dataset_tag: impl Into<String>,
        records: Vec<PredictionRecord>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.sample_id.as_str()) {
                return Err(Error::DuplicateSampleId(r.sample_id.clone()));
            }
        }
        Ok(Self {
            classifier_id: classifier_id.into(),
            dataset_tag: dataset_tag.into(),
            records,
        })
    }

    pub fn validate_classes(&self, catalog: &ClassCatalog) -> Result<()> {
        self.records
            .iter()
            .try_for_each(|r| catalog.check(r.true_class).and_then(|_| catalog.check(r.pred_class)))
    }

    pub fn classifier_id(&self) -> &str {
        &self.classifier_id
    }

    pub fn dataset_tag(&self) -> &str {
        &self.dataset_tag
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Serialize)]
struct Line<'a> {
    classifier_id: &'a str,
    dataset_tag: &'a str,
    sample_id: &'a str,
    true_class: u32,
    pred_class: u32,
}

#[derive(Deserialize)]
struct OwnedLine {
    classifier_id: String,
    dataset_tag: String,
    sample_id: String,
    true_class: u32,
    pred_class: u32,
}

const FIELDS: [&str; 5] = ["classifier_id", "dataset_tag", "sample_id", "true_class", "pred_class"];

/// Counters gathered while reading a text format.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadStats {
    pub unknown_fields: usize,
}

pub fn write_prediction_log(log: &PredictionLog, path: &Path) -> Result<()> {
    let text = jsonl::to_string(log.records.iter().map(|r| Line {
        classifier_id: &log.classifier_id,
        dataset_tag: &log.dataset_tag,
        sample_id: &r.sample_id,
        true_class: r.true_class,
        pred_class: r.pred_class,
    }))?;
    jsonl::write_file(path, &text)
}

pub fn read_prediction_log(path: &Path) -> Result<PredictionLog> {
    read_prediction_log_with_stats(path).map(|(log, _)| log)
}

/// Reads a log, ignoring unknown fields but counting them.
pub fn read_prediction_log_with_stats(path: &Path) -> Result<(PredictionLog, ReadStats)> {
    let mut stats = ReadStats::default();
    let mut header: Option<(String, String)> = None;
    let mut records = Vec::new();
    let mut seen = HashSet::new();

    for (line_no, text) in jsonl::read_lines(path)? {
        let err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            reason,
        };
        let mut obj: Map<String, Value> = jsonl::parse_line(path, line_no, &text)?;
        stats.unknown_fields += obj.keys().filter(|k| !FIELDS.contains(&k.as_str())).count();
        obj.retain(|k, _| FIELDS.contains(&k.as_str()));
        let line: OwnedLine = serde_json::from_value(Value::Object(obj)).map_err(|e| err(e.to_string()))?;

        match &header {
            None => header = Some((line.classifier_id.clone(), line.dataset_tag.clone())),
            Some((c, d)) if *c != line.classifier_id || *d != line.dataset_tag => {
                return Err(err(format!(
                    "record for ({}, {}) in a log of ({c}, {d})",
                    line.classifier_id, line.dataset_tag
                )));
            }
            Some(_) => {}
        }
        if !seen.insert(line.sample_id.clone()) {
            return Err(Error::DuplicateSampleId(line.sample_id));
        }
        records.push(PredictionRecord {
            sample_id: line.sample_id,
            true_class: line.true_class,
            pred_class: line.pred_class,
        });
    }
    if stats.unknown_fields > 0 {
        log::warn!("{}: ignored {} unknown field(s)", path.display(), stats.unknown_fields);
    }
    let (classifier_id, dataset_tag) = header.unwrap_or_default();
    Ok((
        PredictionLog {
            classifier_id,
            dataset_tag,
            records,
        },
        stats,
    ))
}
