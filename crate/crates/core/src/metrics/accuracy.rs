use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::PredictionLog;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: u64,
    pub total: u64,
}

impl Tally {
    pub fn percent(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::EmptyRestriction);
        }
        Ok(100.0 * self.correct as f64 / self.total as f64)
    }
}

/// Percentage of records with `pred_class == true_class`, counting only
/// records whose true class is in `classes` (all records when `None`).
pub fn accuracy(log: &PredictionLog, classes: Option<&BTreeSet<u32>>) -> Result<f64> {
    let mut tally = Tally::default();
    for r in log.records() {
        if classes.is_none_or(|c| c.contains(&r.true_class)) {
            tally.total += 1;
            tally.correct += (r.pred_class == r.true_class) as u64;
        }
    }
    tally.percent()
}
