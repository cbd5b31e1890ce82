//! Accuracy gap and effective robustness against a linear baseline fitted
//! over a zoo of standard classifiers.

use serde::{Deserialize, Serialize};

use crate::data::ClassifierPoint;
use crate::error::{Error, Result};

/// Shifted-set accuracy minus source-test accuracy, in percentage points.
pub fn accuracy_gap(acc_shifted: f64, acc_source: f64) -> f64 {
    acc_shifted - acc_source
}

/// Axis on which the baseline line is fitted. Both accuracies are mapped
/// through the transform before the fit and predictions are mapped back.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisTransform {
    /// Raw percentages.
    #[default]
    Identity,
    /// `ln(p / (1 - p))` of the accuracy as a fraction.
    Logit,
}

impl AxisTransform {
    fn forward(self, percent: f64) -> Result<f64> {
        match self {
            AxisTransform::Identity => Ok(percent),
            AxisTransform::Logit => {
                let p = percent / 100.0;
                if p <= 0.0 || p >= 1.0 {
                    return Err(Error::InvalidValue(format!(
                        "logit axis needs accuracies strictly inside (0, 100), got {percent}"
                    )));
                }
                Ok((p / (1.0 - p)).ln())
            }
        }
    }

    fn inverse(self, v: f64) -> f64 {
        match self {
            AxisTransform::Identity => v,
            AxisTransform::Logit => 100.0 / (1.0 + (-v).exp()),
        }
    }
}

/// Least-squares line `shifted ≈ slope · source + intercept`, on the axis
/// given by `transform`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineFit {
    pub slope: f64,
    pub intercept: f64,
    pub n_points: usize,
    /// Root mean squared vertical residual on the fitted axis.
    pub residual_rms: f64,
    #[serde(default)]
    pub transform: AxisTransform,
}

impl BaselineFit {
    /// Expected shifted accuracy (percent) of a standard classifier with
    /// source accuracy `source_accuracy`.
    pub fn predict(&self, source_accuracy: f64) -> Result<f64> {
        let x = self.transform.forward(source_accuracy)?;
        Ok(self.transform.inverse(self.slope * x + self.intercept))
    }
}

pub fn fit_baseline(points: &[ClassifierPoint]) -> Result<BaselineFit> {
    fit_baseline_with(points, AxisTransform::Identity)
}

pub fn fit_baseline_with(points: &[ClassifierPoint], transform: AxisTransform) -> Result<BaselineFit> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let first = points[0].source_accuracy;
    if points.iter().all(|p| p.source_accuracy == first) {
        return Err(Error::DegenerateBaseline(first));
    }
    let xy = points
        .iter()
        .map(|p| {
            p.validate()?;
            Ok((transform.forward(p.source_accuracy)?, transform.forward(p.shifted_accuracy)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = xy.len() as f64;
    let mean_x = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in &xy {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateBaseline(first));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xy
        .iter()
        .map(|&(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    Ok(BaselineFit {
        slope,
        intercept,
        n_points: xy.len(),
        residual_rms: (ss_res / n).sqrt(),
        transform,
    })
}

/// Shifted accuracy above the baseline's prediction, in percentage points.
pub fn effective_robustness(query: &ClassifierPoint, fit: &BaselineFit) -> Result<f64> {
    Ok(query.shifted_accuracy - fit.predict(query.source_accuracy)?)
}
