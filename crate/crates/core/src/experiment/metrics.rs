//! Confusion counts and the four ratio metrics, class 0 positive.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Label treated as positive.
pub const POSITIVE: u8 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub accuracy: f64,
    /// 0 when nothing was predicted positive; see `precision_defined`.
    pub precision: f64,
    /// 0 when there are no positive samples; see `recall_defined`.
    pub recall: f64,
    /// Harmonic mean of precision and recall, 0 when either is undefined or both are 0.
    pub f1: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
}

impl MetricsReport {
    pub fn from_counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> Self {
        let total = tp + tn + fp + fn_;
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let (pd, rd) = (tp + fp > 0, tp + fn_ > 0);
        let f1 = if pd && rd && precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            tp,
            tn,
            fp,
            fn_,
            accuracy: ratio(tp + tn, total),
            precision,
            recall,
            f1,
            precision_defined: pd,
            recall_defined: rd,
        }
    }

    pub fn from_predictions(predicted: &[u8], actual: &[u8]) -> Result<Self> {
        if predicted.len() != actual.len() || predicted.is_empty() {
            return Err(Error::shape(format!(
                "{} predictions for {} labels",
                predicted.len(),
                actual.len()
            )));
        }
        let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p == POSITIVE, a == POSITIVE) {
                (true, true) => tp += 1,
                (false, false) => tn += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
            }
        }
        Ok(Self::from_counts(tp, tn, fp, fn_))
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}
