//! Class-overlap restricted evaluation and cross-dataset comparison tables.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{ClassCatalog, ClassifierPoint, PredictionLog};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::metrics::{accuracy, accuracy_gap, effective_robustness, fit_baseline, BaselineFit};

/// Version tag of [`normalize_name`]; bump when its rules change.
pub const NAME_NORMALIZER_VERSION: &str = "v1";

/// Lowercase, trimmed, internal whitespace runs collapsed to one space.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Bijection between the shared classes of two catalogs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapMap {
    pub source_tag: String,
    pub target_tag: String,
    /// `(source_class_id, target_class_id)`, ascending by source id.
    pairs: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OverlapReport {
    pub unmatched_source: Vec<u32>,
    pub unmatched_target: Vec<u32>,
}

impl OverlapMap {
    pub fn new(source_tag: impl Into<String>, target_tag: impl Into<String>, mut pairs: Vec<(u32, u32)>) -> Result<Self> {
        pairs.sort_unstable();
        let mut src = BTreeSet::new();
        let mut tgt = BTreeSet::new();
        for &(s, t) in &pairs {
            if !src.insert(s) {
                return Err(Error::NonInjectiveOverlap(s));
            }
            if !tgt.insert(t) {
                return Err(Error::NonInjectiveOverlap(t));
            }
        }
        Ok(Self {
            source_tag: source_tag.into(),
            target_tag: target_tag.into(),
            pairs,
        })
    }

    /// Maps every class of `catalog` to itself.
    pub fn identity(catalog: &ClassCatalog) -> Self {
        let tag = catalog.dataset_tag().to_string();
        Self {
            source_tag: tag.clone(),
            target_tag: tag,
            pairs: catalog.iter().map(|(id, _)| (id, id)).collect(),
        }
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn source_classes(&self) -> BTreeSet<u32> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn target_classes(&self) -> BTreeSet<u32> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    /// Overlapping class ids on the side whose tag is `dataset_tag`.
    pub fn classes_for(&self, dataset_tag: &str) -> Result<BTreeSet<u32>> {
        if dataset_tag == self.source_tag {
            Ok(self.source_classes())
        } else if dataset_tag == self.target_tag {
            Ok(self.target_classes())
        } else {
            Err(Error::OverlapSideMismatch {
                dataset: dataset_tag.to_string(),
                source_tag: self.source_tag.clone(),
                target_tag: self.target_tag.clone(),
            })
        }
    }

    /// Two tab-separated columns, source then target, after two header
    /// comments naming the datasets.
    pub fn to_text(&self) -> String {
        let mut out = format!("# source: {}\n# target: {}\n", self.source_tag, self.target_tag);
        for (s, t) in &self.pairs {
            let _ = writeln!(out, "{s}\t{t}");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        jsonl::write_file(path, &self.to_text())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let (mut source_tag, mut target_tag) = (String::new(), String::new());
        let mut pairs = Vec::new();
        for (n, line) in jsonl::read_lines(path)? {
            let err = |reason: String| Error::Parse {
                path: path.to_path_buf(),
                line: n,
                reason,
            };
            if let Some(rest) = line.strip_prefix("# source:") {
                source_tag = rest.trim().to_string();
            } else if let Some(rest) = line.strip_prefix("# target:") {
                target_tag = rest.trim().to_string();
            } else if !line.starts_with('#') {
                let mut cols = line.split_whitespace();
                let mut next = || -> Result<u32> {
                    let c = cols.next().ok_or_else(|| err("expected two columns".into()))?;
                    c.parse().map_err(|e| err(format!("bad class id {c:?}: {e}")))
                };
                let s = next()?;
                let t = next()?;
                pairs.push((s, t));
            }
        }
        Self::new(source_tag, target_tag, pairs)
    }
}

/// Matches classes whose normalised names coincide.
pub fn build_overlap(
    source: &ClassCatalog,
    target: &ClassCatalog,
    normalizer: impl Fn(&str) -> String,
) -> Result<(OverlapMap, OverlapReport)> {
    let index = |cat: &ClassCatalog| -> Result<HashMap<String, u32>> {
        let mut m = HashMap::with_capacity(cat.len());
        for (id, name) in cat.iter() {
            let key = normalizer(name);
            if m.insert(key.clone(), id).is_some() {
                return Err(Error::AmbiguousName {
                    tag: cat.dataset_tag().to_string(),
                    name: key,
                });
            }
        }
        Ok(m)
    };
    let src = index(source)?;
    let tgt = index(target)?;

    let mut pairs = Vec::new();
    let mut report = OverlapReport::default();
    for (id, name) in source.iter() {
        match tgt.get(&normalizer(name)) {
            Some(&t) => pairs.push((id, t)),
            None => report.unmatched_source.push(id),
        }
    }
    report.unmatched_target = target
        .iter()
        .filter(|(_, name)| !src.contains_key(&normalizer(name)))
        .map(|(id, _)| id)
        .collect();
    Ok((OverlapMap::new(source.dataset_tag(), target.dataset_tag(), pairs)?, report))
}

/// Accuracy over records whose true class lies in the overlap. Predictions
/// outside the overlap can never equal an in-overlap true class, so they
/// count as errors.
pub fn restricted_accuracy(log: &PredictionLog, overlap: &OverlapMap) -> Result<f64> {
    let classes = overlap.classes_for(log.dataset_tag())?;
    accuracy(log, Some(&classes))
}

/// One classifier's accuracies across datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub classifier_id: String,
    pub training_recipe: String,
    pub source_tag: String,
    /// `(dataset_tag, accuracy)` in declared order.
    pub per_dataset: Vec<(String, f64)>,
    pub average_includes_source: bool,
    #[serde(with = "jsonl::nan_as_null")]
    pub average: f64,
}

impl EvalRow {
    pub fn new(
        classifier_id: impl Into<String>,
        training_recipe: impl Into<String>,
        source_tag: impl Into<String>,
        per_dataset: Vec<(String, f64)>,
        average_includes_source: bool,
    ) -> Result<Self> {
        let source_tag = source_tag.into();
        let included: Vec<f64> = per_dataset
            .iter()
            .filter(|(tag, _)| average_includes_source || *tag != source_tag)
            .map(|(_, a)| *a)
            .collect();
        let average = if included.is_empty() {
            f64::NAN
        } else {
            included.iter().sum::<f64>() / included.len() as f64
        };
        Ok(Self {
            classifier_id: classifier_id.into(),
            training_recipe: training_recipe.into(),
            source_tag,
            per_dataset,
            average_includes_source,
            average,
        })
    }

    pub fn accuracy(&self, dataset_tag: &str) -> Option<f64> {
        self.per_dataset
            .iter()
            .find(|(t, _)| t == dataset_tag)
            .map(|(_, a)| *a)
    }
}

/// Builds one [`EvalRow`] per classifier from its logs. A log whose dataset
/// has an entry in `overlaps` is scored with [`restricted_accuracy`].
pub fn evaluate_logs(
    logs: &[PredictionLog],
    training_recipe: &str,
    source_tag: &str,
    overlaps: &BTreeMap<String, OverlapMap>,
    average_includes_source: bool,
) -> Result<Vec<EvalRow>> {
    let mut order: Vec<&str> = Vec::new();
    let mut by_classifier: HashMap<&str, Vec<(String, f64)>> = HashMap::new();
    for log in logs {
        let acc = match overlaps.get(log.dataset_tag()) {
            Some(map) => restricted_accuracy(log, map)?,
            None => accuracy(log, None)?,
        };
        let cells = by_classifier.entry(log.classifier_id()).or_insert_with(|| {
            order.push(log.classifier_id());
            Vec::new()
        });
        cells.push((log.dataset_tag().to_string(), acc));
    }
    order
        .into_iter()
        .map(|id| {
            let mut cells = by_classifier.remove(id).unwrap_or_default();
            // Source first, others in input order.
            cells.sort_by_key(|(tag, _)| tag != source_tag);
            EvalRow::new(id, training_recipe, source_tag, cells, average_includes_source)
        })
        .collect()
}

pub fn write_eval_rows(rows: &[EvalRow], path: &Path) -> Result<()> {
    jsonl::write_file(path, &jsonl::to_string(rows)?)
}

pub fn read_eval_rows(path: &Path) -> Result<Vec<EvalRow>> {
    jsonl::read_records(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftCell {
    pub dataset_tag: String,
    pub accuracy: f64,
    pub gap: f64,
    pub effective_robustness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub classifier_id: String,
    pub training_recipe: String,
    pub source_accuracy: f64,
    pub cells: Vec<ShiftCell>,
    /// Mean accuracy, over shifted sets and the source when
    /// `average_includes_source`.
    #[serde(with = "jsonl::nan_as_null")]
    pub average_accuracy: f64,
    /// Mean gap over shifted sets.
    #[serde(with = "jsonl::nan_as_null")]
    pub average_gap: f64,
    /// Mean effective robustness over shifted sets.
    #[serde(with = "jsonl::nan_as_null")]
    pub average_effective_robustness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub source_tag: String,
    pub shifted_tags: Vec<String>,
    pub average_includes_source: bool,
    pub fits: Vec<(String, BaselineFit)>,
    pub rows: Vec<ComparisonRow>,
}

/// Column layout of a comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub source_tag: String,
    pub shifted_tags: Vec<String>,
    pub average_includes_source: bool,
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn row_averages(row: &ComparisonRow, include_source: bool) -> (f64, f64, f64) {
    let accs = row.cells.iter().map(|c| c.accuracy);
    let avg_acc = if include_source {
        mean(std::iter::once(row.source_accuracy).chain(accs))
    } else {
        mean(accs)
    };
    (
        avg_acc,
        mean(row.cells.iter().map(|c| c.gap)),
        mean(row.cells.iter().map(|c| c.effective_robustness)),
    )
}

/// Per shifted dataset: accuracy, gap to the source accuracy, and effective
/// robustness against a baseline fitted on that dataset's zoo.
pub fn compare_recipes(
    rows: &[EvalRow],
    zoos: &BTreeMap<String, Vec<ClassifierPoint>>,
    layout: &Layout,
) -> Result<ComparisonTable> {
    let mut fits = Vec::with_capacity(layout.shifted_tags.len());
    for tag in &layout.shifted_tags {
        let zoo = zoos.get(tag).ok_or_else(|| Error::MissingZoo(tag.clone()))?;
        fits.push((tag.clone(), fit_baseline(zoo)?));
    }

    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let missing = |dataset: &str| Error::MissingAccuracy {
            row: row.classifier_id.clone(),
            dataset: dataset.to_string(),
        };
        let source_accuracy = row
            .accuracy(&layout.source_tag)
            .ok_or_else(|| missing(&layout.source_tag))?;
        let mut cells = Vec::with_capacity(fits.len());
        for (tag, fit) in &fits {
            let acc = row.accuracy(tag).ok_or_else(|| missing(tag))?;
            let point = ClassifierPoint::new(row.classifier_id.clone(), source_accuracy, acc)?;
            cells.push(ShiftCell {
                dataset_tag: tag.clone(),
                accuracy: acc,
                gap: accuracy_gap(acc, source_accuracy),
                effective_robustness: effective_robustness(&point, fit)?,
            });
        }
        let mut cr = ComparisonRow {
            classifier_id: row.classifier_id.clone(),
            training_recipe: row.training_recipe.clone(),
            source_accuracy,
            cells,
            average_accuracy: 0.0,
            average_gap: 0.0,
            average_effective_robustness: 0.0,
        };
        (cr.average_accuracy, cr.average_gap, cr.average_effective_robustness) =
            row_averages(&cr, layout.average_includes_source);
        out.push(cr);
    }
    let table = ComparisonTable {
        source_tag: layout.source_tag.clone(),
        shifted_tags: layout.shifted_tags.clone(),
        average_includes_source: layout.average_includes_source,
        fits,
        rows: out,
    };
    table.verify()?;
    Ok(table)
}

impl ComparisonTable {
    /// Recomputes every average column from its cells.
    pub fn verify(&self) -> Result<()> {
        for row in &self.rows {
            if row.cells.len() != self.shifted_tags.len() {
                return Err(Error::RaggedTable {
                    row: row.classifier_id.clone(),
                    expected: self.shifted_tags.len(),
                    found: row.cells.len(),
                });
            }
            let (a, g, e) = row_averages(row, self.average_includes_source);
            let same = |x: f64, y: f64| x == y || (x.is_nan() && y.is_nan());
            if !(same(a, row.average_accuracy)
                && same(g, row.average_gap)
                && same(e, row.average_effective_robustness))
            {
                return Err(Error::InvalidValue(format!(
                    "averages of row {} do not match its cells",
                    row.classifier_id
                )));
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::InvalidValue(e.to_string()))?;
        jsonl::write_file(path, &(text + "\n"))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            reason: e.to_string(),
        })?;
        table.verify()?;
        Ok(table)
    }
}
