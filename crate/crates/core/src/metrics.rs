//! Confusion counts, per-class precision/recall/F1 and binary macro F1.
//!
//! Zero-division convention: a class with `tp = fp = fn = 0` (absent and never
//! predicted) scores F1 = 1; otherwise a zero precision or recall gives F1 = 0.
//! Probabilities strictly above 0.5 are predicted positive.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("predictions ({predictions}) and labels ({labels}) differ in length")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("no samples to evaluate")]
    Empty,
}

/// Counts for one class treated as "positive".
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn from_predictions(predictions: &[bool], labels: &[bool]) -> Result<Self, MetricsError> {
        check(predictions, labels)?;
        let mut c = Self::default();
        for (&p, &y) in predictions.iter().zip(labels) {
            match (p, y) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same counts seen from the negative class.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }

    pub fn class_scores(&self) -> ClassScores {
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = if self.tp + self.fp + self.fn_ == 0 {
            1.0
        } else if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassScores {
            precision,
            recall,
            f1,
        }
    }

    /// Mean of the positive-class and negative-class F1.
    pub fn macro_f1(&self) -> f64 {
        (self.class_scores().f1 + self.swapped().class_scores().f1) / 2.0
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn check(predictions: &[bool], labels: &[bool]) -> Result<(), MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

pub fn macro_f1(predictions: &[bool], labels: &[bool]) -> Result<f64, MetricsError> {
    Ok(ConfusionCounts::from_predictions(predictions, labels)?.macro_f1())
}

/// Decision rule for a sigmoid output.
pub fn predict_positive(probability: f64) -> bool {
    probability > 0.5
}
