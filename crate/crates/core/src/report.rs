//! Text, CSV and Markdown tables plus accuracy-scatter plot data.
//!
//! Numbers print with one decimal, rounding half to even on `10·x`, and
//! `-0.0` prints as `0.0`.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::ClassifierPoint;
use crate::error::{Error, Result};
use crate::eval::ComparisonTable;
use crate::jsonl;
use crate::metrics::{effective_robustness, BaselineFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Md,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" | "txt" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Md),
            _ => Err(Error::InvalidValue(format!("unknown table format {s:?}"))),
        }
    }
}

/// Which quantity a comparison table shows per shifted dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    /// Source accuracy, shifted accuracies, average accuracy.
    Accuracy,
    /// Accuracy gap per shifted set, average gap.
    Gap,
    /// Effective robustness per shifted set, average.
    Robustness,
}

impl FromStr for View {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" | "acc" => Ok(View::Accuracy),
            "gap" | "ag" => Ok(View::Gap),
            "robustness" | "er" => Ok(View::Robustness),
            _ => Err(Error::InvalidValue(format!("unknown table view {s:?}"))),
        }
    }
}

/// Labelled numeric table. The first two columns are text labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<(String, String, Vec<f64>)>,
}

impl Table {
    pub fn from_comparison(cmp: &ComparisonTable, view: View) -> Self {
        let mut columns = Vec::new();
        if view == View::Accuracy {
            columns.push(cmp.source_tag.clone());
        }
        columns.extend(cmp.shifted_tags.iter().cloned());
        columns.push("Average".to_string());
        let rows = cmp
            .rows
            .iter()
            .map(|r| {
                let mut vals = Vec::with_capacity(columns.len());
                match view {
                    View::Accuracy => {
                        vals.push(r.source_accuracy);
                        vals.extend(r.cells.iter().map(|c| c.accuracy));
                        vals.push(r.average_accuracy);
                    }
                    View::Gap => {
                        vals.extend(r.cells.iter().map(|c| c.gap));
                        vals.push(r.average_gap);
                    }
                    View::Robustness => {
                        vals.extend(r.cells.iter().map(|c| c.effective_robustness));
                        vals.push(r.average_effective_robustness);
                    }
                }
                (r.classifier_id.clone(), r.training_recipe.clone(), vals)
            })
            .collect();
        Self { columns, rows }
    }
}

/// One decimal, half-to-even on `10·x`.
pub fn format_one_decimal(x: f64) -> String {
    if x.is_nan() {
        return "-".to_string();
    }
    let r = (x * 10.0).round_ties_even() / 10.0;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r:.1}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_table(table: &Table, format: Format) -> Result<String> {
    for (id, _, vals) in &table.rows {
        if vals.len() != table.columns.len() {
            return Err(Error::RaggedTable {
                row: id.clone(),
                expected: table.columns.len(),
                found: vals.len(),
            });
        }
    }
    let mut header = vec!["Classifier".to_string(), "Recipe".to_string()];
    header.extend(table.columns.iter().cloned());
    let body: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|(id, recipe, vals)| {
            let mut cells = vec![id.clone(), recipe.clone()];
            cells.extend(vals.iter().map(|&v| format_one_decimal(v)));
            cells
        })
        .collect();

    let mut out = String::new();
    match format {
        Format::Csv => {
            for line in std::iter::once(&header).chain(&body) {
                let fields: Vec<String> = line.iter().map(|f| csv_field(f)).collect();
                let _ = writeln!(out, "{}", fields.join(","));
            }
        }
        Format::Md => {
            let _ = writeln!(out, "| {} |", header.join(" | "));
            let align: Vec<&str> = (0..header.len()).map(|i| if i < 2 { "---" } else { "---:" }).collect();
            let _ = writeln!(out, "| {} |", align.join(" | "));
            for line in &body {
                let _ = writeln!(out, "| {} |", line.join(" | "));
            }
        }
        Format::Text => {
            let widths: Vec<usize> = (0..header.len())
                .map(|i| {
                    std::iter::once(&header)
                        .chain(&body)
                        .map(|l| l[i].chars().count())
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let fmt_line = |line: &[String]| -> String {
                line.iter()
                    .enumerate()
                    .map(|(i, c)| {
                        if i < 2 {
                            format!("{c:<w$}", w = widths[i])
                        } else {
                            format!("{c:>w$}", w = widths[i])
                        }
                    })
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            };
            let _ = writeln!(out, "{}", fmt_line(&header));
            let rule: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            let _ = writeln!(out, "{}", "-".repeat(rule));
            for line in &body {
                let _ = writeln!(out, "{}", fmt_line(line));
            }
        }
    }
    Ok(out)
}

/// One record of the scatter plot-data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScatterRecord {
    Point {
        classifier_id: String,
        x: f64,
        y: f64,
    },
    Line {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
        slope: f64,
        intercept: f64,
    },
    Annotation {
        classifier_id: String,
        x: f64,
        y: f64,
        effective_robustness: f64,
    },
}

/// Zoo points, the baseline over the observed source-accuracy range, and
/// one ER annotation per query.
pub fn er_scatter(zoo: &[ClassifierPoint], fit: &BaselineFit, queries: &[ClassifierPoint]) -> Result<Vec<ScatterRecord>> {
    let mut out: Vec<ScatterRecord> = zoo
        .iter()
        .map(|p| ScatterRecord::Point {
            classifier_id: p.classifier_id.clone(),
            x: p.source_accuracy,
            y: p.shifted_accuracy,
        })
        .collect();
    let xs = zoo.iter().chain(queries).map(|p| p.source_accuracy);
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if lo.is_finite() {
        out.push(ScatterRecord::Line {
            x0: lo,
            y0: fit.predict(lo)?,
            x1: hi,
            y1: fit.predict(hi)?,
            slope: fit.slope,
            intercept: fit.intercept,
        });
    }
    for q in queries {
        out.push(ScatterRecord::Annotation {
            classifier_id: q.classifier_id.clone(),
            x: q.source_accuracy,
            y: q.shifted_accuracy,
            effective_robustness: effective_robustness(q, fit)?,
        });
    }
    Ok(out)
}

pub fn render_er_scatter(zoo: &[ClassifierPoint], fit: &BaselineFit, queries: &[ClassifierPoint]) -> Result<String> {
    jsonl::to_string(er_scatter(zoo, fit, queries)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{ComparisonRow, ShiftCell};
    use crate::metrics::fit_baseline;

    #[test]
    fn rounding_is_half_even() {
        assert_eq!(format_one_decimal(0.25), "0.2");
        assert_eq!(format_one_decimal(0.35), "0.4");
        assert_eq!(format_one_decimal(50.94), "50.9");
        assert_eq!(format_one_decimal(-0.04), "0.0");
        assert_eq!(format_one_decimal(-53.4), "-53.4");
    }

    fn table5_real() -> ComparisonTable {
        let shifted = ["sketch", "rendition", "v2", "objectnet"];
        let accs = [25.0, 42.2, 68.5, 40.6];
        let cells = shifted
            .iter()
            .zip(accs)
            .map(|(t, a)| ShiftCell {
                dataset_tag: t.to_string(),
                accuracy: a,
                gap: a - 78.4,
                effective_robustness: 0.0,
            })
            .collect();
        ComparisonTable {
            source_tag: "imagenet".into(),
            shifted_tags: shifted.iter().map(|s| s.to_string()).collect(),
            average_includes_source: true,
            fits: vec![],
            rows: vec![ComparisonRow {
                classifier_id: "resnet50".into(),
                training_recipe: "Real".into(),
                source_accuracy: 78.4,
                cells,
                average_accuracy: (78.4 + 25.0 + 42.2 + 68.5 + 40.6) / 5.0,
                average_gap: 0.0,
                average_effective_robustness: 0.0,
            }],
        }
    }

    #[test]
    fn five_accuracy_columns_plus_average() {
        let t = Table::from_comparison(&table5_real(), View::Accuracy);
        assert_eq!(t.columns, ["imagenet", "sketch", "rendition", "v2", "objectnet", "Average"]);
        let csv = render_table(&t, Format::Csv).unwrap();
        assert_eq!(
            csv,
            "Classifier,Recipe,imagenet,sketch,rendition,v2,objectnet,Average\n\
             resnet50,Real,78.4,25.0,42.2,68.5,40.6,50.9\n"
        );
        let md = render_table(&t, Format::Md).unwrap();
        assert!(md.starts_with("| Classifier | Recipe | imagenet |"));
        assert_eq!(md.lines().count(), 3);
        let text = render_table(&t, Format::Text).unwrap();
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn empty_comparison_is_header_only() {
        let mut cmp = table5_real();
        cmp.rows.clear();
        let csv = render_table(&Table::from_comparison(&cmp, View::Accuracy), Format::Csv).unwrap();
        assert_eq!(csv.lines().count(), 1);
    }

    #[test]
    fn one_by_one() {
        let t = Table {
            columns: vec!["x".into()],
            rows: vec![("a".into(), "r".into(), vec![1.25])],
        };
        assert_eq!(render_table(&t, Format::Csv).unwrap(), "Classifier,Recipe,x\na,r,1.2\n");
    }

    #[test]
    fn ragged_rows_rejected() {
        let t = Table {
            columns: vec!["x".into(), "y".into()],
            rows: vec![("a".into(), "r".into(), vec![1.0])],
        };
        assert!(matches!(render_table(&t, Format::Text), Err(Error::RaggedTable { .. })));
    }

    #[test]
    fn scatter_line_lies_on_collinear_zoo() {
        let zoo: Vec<_> = [(70.0, 40.0), (80.0, 50.0), (90.0, 60.0)]
            .iter()
            .map(|&(x, y)| ClassifierPoint::new("z", x, y).unwrap())
            .collect();
        let fit = fit_baseline(&zoo).unwrap();
        let recs = er_scatter(&zoo, &fit, &[]).unwrap();
        assert_eq!(recs.len(), 4);
        match &recs[3] {
            ScatterRecord::Line { x0, y0, x1, y1, .. } => {
                assert_eq!((*x0, *x1), (70.0, 90.0));
                assert!((y0 - 40.0).abs() < 1e-10 && (y1 - 60.0).abs() < 1e-10);
            }
            other => panic!("expected line, got {other:?}"),
        }
        let q = ClassifierPoint::new("q", 85.0, 55.0).unwrap();
        let recs = er_scatter(&zoo, &fit, &[q]).unwrap();
        match recs.last().unwrap() {
            ScatterRecord::Annotation { effective_robustness, .. } => {
                assert_eq!(format_one_decimal(*effective_robustness), "0.0");
            }
            other => panic!("expected annotation, got {other:?}"),
        }
        let text = render_er_scatter(&zoo, &fit, &[]).unwrap();
        assert!(text.lines().last().unwrap().starts_with("{\"kind\":\"line\""));
    }
}
