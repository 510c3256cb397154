//! Entropy-based uncertainty scores and per-batch top-k selection.
//!
//! Each task head yields a sigmoid probability whose binary entropy measures
//! how unsure the model is. The three task entropies are combined into one
//! score per sample by an equal mean, a normalized weighted mean, or a
//! dynamically weighted sum whose offensive weight follows the model's dev
//! macro F1.

use crate::task::TaskTriple;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use thiserror::Error;

pub type TaskEntropies = TaskTriple<f64>;

const PROB_CLAMP: f64 = 1e-12;

/// How task entropies are combined, or `None` to train on whole batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UncertaintyMode {
    None,
    Equal,
    Weighted,
    Dynamic,
}

impl UncertaintyMode {
    pub const ALL: [UncertaintyMode; 4] = [Self::None, Self::Equal, Self::Weighted, Self::Dynamic];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Equal => "equal",
            Self::Weighted => "weighted",
            Self::Dynamic => "dynamic",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AcquisitionError {
    #[error("uncertainty weights must be positive and finite: {0:?}")]
    BadWeights(TaskTriple<f64>),
    #[error("invalid dynamic weight config: {0}")]
    BadDynamic(String),
}

/// Fixed per-task weights for the weighted combiner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TaskTriple<f64>", into = "TaskTriple<f64>")]
pub struct UncertaintyWeights(TaskTriple<f64>);

impl UncertaintyWeights {
    pub fn new(weights: TaskTriple<f64>) -> Result<Self, AcquisitionError> {
        if weights.values().iter().all(|w| w.is_finite() && **w > 0.0) {
            Ok(Self(weights))
        } else {
            Err(AcquisitionError::BadWeights(weights))
        }
    }

    pub fn get(&self) -> TaskTriple<f64> {
        self.0
    }
}

impl Default for UncertaintyWeights {
    fn default() -> Self {
        Self(TaskTriple::new(2.0, 1.0, 1.0))
    }
}

impl TryFrom<TaskTriple<f64>> for UncertaintyWeights {
    type Error = AcquisitionError;

    fn try_from(value: TaskTriple<f64>) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<UncertaintyWeights> for TaskTriple<f64> {
    fn from(w: UncertaintyWeights) -> Self {
        w.0
    }
}

/// Schedule for the offensive weight of the dynamic combiner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicWeightConfig {
    /// Minimum acceptable offensive macro F1.
    pub t_min: f64,
    pub w_min: f64,
    pub w_max: f64,
    /// Offensive weight used before any dev F1 exists.
    pub initial_offensive: f64,
    /// Violent weight as a fraction of the offensive weight.
    pub violent_coeff: f64,
    /// Vulgar weight as a fraction of the offensive weight.
    pub vulgar_coeff: f64,
}

impl Default for DynamicWeightConfig {
    fn default() -> Self {
        Self {
            t_min: 0.75,
            w_min: 0.5,
            w_max: 2.0,
            initial_offensive: 2.0,
            violent_coeff: 2.0 / 3.0,
            vulgar_coeff: 0.5,
        }
    }
}

impl DynamicWeightConfig {
    pub fn validate(&self) -> Result<(), AcquisitionError> {
        let bad = |m: &str| Err(AcquisitionError::BadDynamic(m.to_string()));
        if !(self.t_min > 0.0 && self.t_min < 1.0) {
            return bad("t_min must lie in (0, 1)");
        }
        if !(self.w_min > 0.0 && self.w_min <= self.w_max && self.w_max.is_finite()) {
            return bad("need 0 < w_min <= w_max");
        }
        if !(self.initial_offensive > 0.0 && self.initial_offensive.is_finite()) {
            return bad("initial_offensive must be positive");
        }
        if !(self.violent_coeff > 0.0 && self.vulgar_coeff > 0.0) {
            return bad("violent_coeff and vulgar_coeff must be positive");
        }
        Ok(())
    }
}

/// `-p ln p - (1-p) ln(1-p)` with `p` clamped to `[1e-12, 1 - 1e-12]`.
pub fn binary_entropy(p: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let q = 1.0 - p;
    -p * p.ln() - q * q.ln()
}

pub fn task_entropies(probs: TaskTriple<f64>) -> TaskEntropies {
    probs.map(binary_entropy)
}

pub fn combine_equal(h: TaskEntropies) -> f64 {
    (h.offensive + h.violent + h.vulgar) / 3.0
}

pub fn combine_weighted(h: TaskEntropies, w: UncertaintyWeights) -> f64 {
    let w = w.get();
    (w.offensive * h.offensive + w.violent * h.violent + w.vulgar * h.vulgar) / w.sum()
}

/// Offensive weight from the latest offensive macro F1.
pub fn dynamic_offensive_weight(f1_off: f64, cfg: &DynamicWeightConfig) -> f64 {
    if f1_off < cfg.t_min {
        cfg.w_max.min((cfg.t_min - f1_off) + 1.0)
    } else {
        cfg.w_min.max(1.0 - (f1_off - cfg.t_min))
    }
}

/// Unnormalized dynamic score `w_off*H_off + c_vio*w_off*H_vio + c_vul*w_off*H_vul`.
pub fn combine_dynamic(h: TaskEntropies, w_off: f64, cfg: &DynamicWeightConfig) -> f64 {
    w_off * h.offensive
        + cfg.violent_coeff * w_off * h.violent
        + cfg.vulgar_coeff * w_off * h.vulgar
}

fn by_score_then_index(scores: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
}

/// Indices of the `k` largest scores, ordered by descending score with ties
/// broken by lower index. `k >= len` returns every index.
pub fn select_top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    let cmp = by_score_then_index(scores);
    if k < idx.len() {
        idx.select_nth_unstable_by(k, &cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(&cmp);
    idx
}
