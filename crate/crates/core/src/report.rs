//! Run reports.
//!
//! A [`RunReport`] serializes to pretty-printed JSON with these top-level
//! fields, in this order:
//!
//! - `schema_version`: integer, currently 1
//! - `config`: the full resolved [`TrainConfig`](crate::trainer::TrainConfig)
//! - `config_hash`: SHA-256 (hex) of the compact JSON encoding of `config`
//! - `data`: `{train, dev, test}` sample counts
//! - `epochs`: one [`EpochRecord`] per epoch run
//! - `best_epoch`, `best_dev_offensive_macro_f1`, `stopped_early`
//! - `cumulative_selected`: samples that received a gradient, summed over epochs
//! - `test`: per-task [`TaskMetrics`] for the reloaded best model, `null`
//!   for tasks without test labels
//!
//! Reports contain no timing information, so identical runs produce
//! byte-identical files.

use crate::metrics::ConfusionCounts;
use crate::task::TaskTriple;
use crate::trainer::TrainConfig;
use serde::{Deserialize, Serialize};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub macro_f1: f64,
    /// Counts with the task's positive class as "positive".
    pub confusion: ConfusionCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Unweighted mean training loss per task, averaged over selected samples.
    pub train_loss: TaskTriple<f64>,
    pub dev_macro_f1: TaskTriple<Option<f64>>,
    pub selected: usize,
    pub cumulative_selected: usize,
    pub loss_weights: TaskTriple<f64>,
    /// Offensive weight of the dynamic uncertainty combiner, when in use.
    pub uncertainty_w_off: Option<f64>,
    /// SHA-256 prefix over the selected training indices, in training order.
    pub selection_digest: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSummary {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: TrainConfig,
    pub config_hash: String,
    pub data: DataSummary,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_dev_offensive_macro_f1: f64,
    pub stopped_early: bool,
    pub cumulative_selected: usize,
    pub test: TaskTriple<Option<TaskMetrics>>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is always serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn test_offensive_macro_f1(&self) -> Option<f64> {
        self.test.offensive.as_ref().map(|m| m.macro_f1)
    }
}
