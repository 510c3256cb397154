//! Joint multi-task training with per-batch uncertainty sampling.
//!
//! Every epoch the training set is shuffled and cut into batches. For each
//! batch the current model scores all members, the top-k most uncertain are
//! kept, and one optimizer step is taken on them with the epoch's task loss
//! weights. At epoch end the dev set is scored; its offensive macro F1 drives
//! early stopping and the dynamic uncertainty weight for the next epoch. When
//! training stops the best epoch's model is restored and scored on test.

use crate::acquisition::{
    combine_dynamic, combine_equal, combine_weighted, dynamic_offensive_weight, select_top_k,
    task_entropies, DynamicWeightConfig, UncertaintyMode, UncertaintyWeights,
};
use crate::corpus::Sample;
use crate::encoder::{Encoder, EncoderConfig};
use crate::metrics::{predict_positive, ConfusionCounts};
use crate::model::{AdamConfig, Example, ModelConfig, ModelError, ModelState, Params};
use crate::report::{DataSummary, EpochRecord, RunReport, TaskMetrics, REPORT_SCHEMA_VERSION};
use crate::seed::{self, hex};
use crate::task::{Task, TaskTriple};
use crate::textprep::{normalize, EmojiPolicy};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossMode {
    Equal,
    Static,
    Dynamic,
}

impl LossMode {
    pub const ALL: [LossMode; 3] = [Self::Equal, Self::Static, Self::Dynamic];

    pub fn name(self) -> &'static str {
        match self {
            Self::Equal => "equal",
            Self::Static => "static",
            Self::Dynamic => "dynamic",
        }
    }
}

/// Samples trained on per batch: the `k` most uncertain, or the whole batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SelectionRepr", into = "SelectionRepr")]
pub enum SelectionSize {
    All,
    Top(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SelectionRepr {
    Count(usize),
    Word(String),
}

impl TryFrom<SelectionRepr> for SelectionSize {
    type Error = String;

    fn try_from(r: SelectionRepr) -> Result<Self, String> {
        match r {
            SelectionRepr::Count(k) => Ok(Self::Top(k)),
            SelectionRepr::Word(w) if w.eq_ignore_ascii_case("all") => Ok(Self::All),
            SelectionRepr::Word(w) => {
                Err(format!("expected a positive integer or \"all\", got {w:?}"))
            }
        }
    }
}

impl From<SelectionSize> for SelectionRepr {
    fn from(s: SelectionSize) -> Self {
        match s {
            SelectionSize::All => Self::Word("all".into()),
            SelectionSize::Top(k) => Self::Count(k),
        }
    }
}

impl fmt::Display for SelectionSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::All => f.write_str("all"),
            Self::Top(k) => write!(f, "{k}"),
        }
    }
}

/// Every knob of a run. Defaults reproduce the best-performing published
/// setting: dynamic loss weighting, equal-entropy sampling, 10 samples per
/// batch of 64, weighted emojis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub k_selected: SelectionSize,
    pub uncertainty_mode: UncertaintyMode,
    pub loss_mode: LossMode,
    pub static_loss_weights: TaskTriple<f64>,
    pub uncertainty_weights: UncertaintyWeights,
    pub dynamic: DynamicWeightConfig,
    pub patience: usize,
    /// Smallest rise in dev offensive macro F1 that counts as improvement.
    pub min_improvement: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub lr: f64,
    pub hidden: usize,
    pub adam: AdamConfig,
    pub emoji: EmojiPolicy,
    pub encoder: EncoderConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            k_selected: SelectionSize::Top(10),
            uncertainty_mode: UncertaintyMode::Equal,
            loss_mode: LossMode::Dynamic,
            static_loss_weights: TaskTriple::new(0.7, 0.15, 0.15),
            uncertainty_weights: UncertaintyWeights::default(),
            dynamic: DynamicWeightConfig::default(),
            patience: 3,
            min_improvement: 1e-6,
            max_epochs: 20,
            seed: 42,
            lr: 1e-2,
            hidden: 64,
            adam: AdamConfig::default(),
            emoji: EmojiPolicy::weighted_default(),
            encoder: EncoderConfig::default(),
        }
    }
}

impl TrainConfig {
    /// Collects every problem rather than stopping at the first.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if self.batch_size == 0 {
            errs.push("batch_size must be at least 1".to_string());
        }
        if let SelectionSize::Top(k) = self.k_selected {
            if k == 0 {
                errs.push("k_selected must be at least 1".to_string());
            } else if k > self.batch_size {
                errs.push(format!(
                    "k_selected ({k}) exceeds batch_size ({})",
                    self.batch_size
                ));
            }
        }
        if let Err(e) = loss_weights_static(self.static_loss_weights) {
            errs.push(e.to_string());
        }
        if let Err(e) = self.dynamic.validate() {
            errs.push(e.to_string());
        }
        if self.patience == 0 {
            errs.push("patience must be at least 1".to_string());
        }
        if !(self.min_improvement >= 0.0 && self.min_improvement.is_finite()) {
            errs.push("min_improvement must be non-negative".to_string());
        }
        if self.max_epochs == 0 {
            errs.push("max_epochs must be at least 1".to_string());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            errs.push(format!("lr must be positive, got {}", self.lr));
        }
        if self.hidden == 0 {
            errs.push("hidden must be at least 1".to_string());
        }
        let a = self.adam;
        if !((0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2)) {
            errs.push("adam betas must lie in [0, 1)".to_string());
        }
        if !(a.epsilon > 0.0 && a.weight_decay >= 0.0 && a.weight_decay.is_finite()) {
            errs.push("adam epsilon must be positive and weight_decay non-negative".to_string());
        }
        if let Err(e) = self.emoji.validate() {
            errs.push(format!("emoji: {e}"));
        }
        if let Err(e) = self.encoder.validate() {
            errs.push(format!("encoder: {e}"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// SHA-256 (hex) of the compact JSON encoding of this config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config is always serializable");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid config: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("training split is empty")]
    EmptyTrain,
    #[error("dev split has no offensive labels")]
    NoDevLabels,
    #[error("training sample {index} lacks a label; train samples must be fully labeled")]
    UnlabeledTrain { index: usize },
    #[error("examples have mixed feature dimensions ({0} and {1})")]
    MixedDims(usize, usize),
    #[error("training diverged in epoch {epoch}: {source}")]
    Diverged {
        epoch: usize,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn loss_weights_equal() -> TaskTriple<f64> {
    TaskTriple::splat(1.0 / 3.0)
}

/// The configured triple scaled to sum to 1.
pub fn loss_weights_static(weights: TaskTriple<f64>) -> Result<TaskTriple<f64>, TrainError> {
    let bad = weights
        .values()
        .iter()
        .any(|w| !(w.is_finite() && **w >= 0.0));
    let total = weights.sum();
    if bad || total <= 0.0 {
        return Err(TrainError::Config(vec![format!(
            "static loss weights must be non-negative and not all zero, got {weights:?}"
        )]));
    }
    Ok(weights.map(|w| w / total))
}

/// Weights proportional to the previous epoch's per-task losses; equal when
/// every loss is zero.
pub fn loss_weights_dynamic(prev_losses: TaskTriple<f64>) -> TaskTriple<f64> {
    let total = prev_losses.sum();
    if !(total > 0.0 && total.is_finite()) {
        return loss_weights_equal();
    }
    prev_losses.map(|l| l.max(0.0) / total)
}

/// Normalizes and encodes samples, preserving order.
pub fn prepare(samples: &[Sample], policy: &EmojiPolicy, encoder: &dyn Encoder) -> Vec<Example> {
    samples
        .par_iter()
        .map(|s| Example {
            features: encoder.encode(&normalize(&s.raw_text, policy)),
            labels: s.labels,
        })
        .collect()
}

/// Per-task metrics on the samples labeled for that task.
pub fn evaluate(
    params: &Params,
    examples: &[Example],
) -> Result<TaskTriple<Option<TaskMetrics>>, ModelError> {
    let probs: Vec<TaskTriple<f64>> = examples
        .par_iter()
        .map(|ex| params.predict_proba(&ex.features))
        .collect::<Result<_, _>>()?;
    Ok(TaskTriple::from_fn(|task| {
        let (preds, labels): (Vec<bool>, Vec<bool>) = examples
            .iter()
            .zip(&probs)
            .filter_map(|(ex, p)| ex.labels[task].map(|y| (predict_positive(p[task]), y)))
            .unzip();
        ConfusionCounts::from_predictions(&preds, &labels)
            .ok()
            .map(|confusion| TaskMetrics {
                macro_f1: confusion.macro_f1(),
                confusion,
            })
    }))
}

/// A finished run: the report, the restored best model, and the training
/// indices selected in each epoch (in training order).
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: RunReport,
    pub model: ModelState,
    pub selections: Vec<Vec<usize>>,
}

fn selection_digest(indices: &[usize]) -> String {
    let mut h = Sha256::new();
    for &i in indices {
        h.update((i as u64).to_le_bytes());
    }
    hex(&h.finalize()[..8])
}

fn common_dim(sets: &[&[Example]]) -> Result<usize, TrainError> {
    let mut dim = None;
    for ex in sets.iter().flat_map(|s| s.iter()) {
        let d = ex.features.dim();
        match dim {
            None => dim = Some(d),
            Some(prev) if prev != d => return Err(TrainError::MixedDims(prev, d)),
            _ => {}
        }
    }
    dim.ok_or(TrainError::EmptyTrain)
}

pub fn train(
    cfg: &TrainConfig,
    train: &[Example],
    dev: &[Example],
    test: &[Example],
) -> Result<TrainOutcome, TrainError> {
    cfg.validate().map_err(TrainError::Config)?;
    if train.is_empty() {
        return Err(TrainError::EmptyTrain);
    }
    if let Some(index) = train
        .iter()
        .position(|ex| ex.labels.values().iter().any(|l| l.is_none()))
    {
        return Err(TrainError::UnlabeledTrain { index });
    }
    if !dev.iter().any(|ex| ex.labels.offensive.is_some()) {
        return Err(TrainError::NoDevLabels);
    }
    let dim = common_dim(&[train, dev, test])?;

    let mut init_rng = seed::stream(cfg.seed, seed::INIT_STREAM);
    let mut shuffle_rng = seed::stream(cfg.seed, seed::SHUFFLE_STREAM);
    let model_cfg = ModelConfig {
        dim,
        hidden: cfg.hidden,
        adam: cfg.adam,
    };
    let mut model = ModelState::new(model_cfg, &mut init_rng);
    let static_weights = loss_weights_static(cfg.static_loss_weights)?;

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = Vec::new();
    let mut selections = Vec::new();
    let mut prev_losses: Option<TaskTriple<f64>> = None;
    let mut prev_dev_f1: Option<f64> = None;
    let mut best: Option<(usize, f64, ModelState)> = None;
    let mut since_best = 0;
    let mut cumulative = 0;
    let mut stopped_early = false;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);

        let loss_weights = match cfg.loss_mode {
            LossMode::Equal => loss_weights_equal(),
            LossMode::Static => static_weights,
            LossMode::Dynamic => prev_losses.map_or_else(loss_weights_equal, loss_weights_dynamic),
        };
        let w_off = prev_dev_f1.map_or(cfg.dynamic.initial_offensive, |f1| {
            dynamic_offensive_weight(f1, &cfg.dynamic)
        });

        let mut loss_acc = TaskTriple::splat(0.0);
        let mut epoch_selected = Vec::with_capacity(train.len());
        for chunk in order.chunks(cfg.batch_size) {
            let picked = select_in_batch(cfg, &model.params, train, chunk, w_off)?;
            let batch: Vec<&Example> = picked.iter().map(|&i| &train[i]).collect();
            let losses = model
                .step(&batch, loss_weights, cfg.lr)
                .map_err(|source| TrainError::Diverged { epoch, source })?;
            let n = batch.len() as f64;
            for task in Task::ALL {
                loss_acc[task] += losses[task] * n;
            }
            epoch_selected.extend(picked);
        }
        let selected = epoch_selected.len();
        let train_loss = loss_acc.map(|s| s / selected as f64);
        cumulative += selected;

        let dev_metrics = evaluate(&model.params, dev)?;
        let dev_f1 = dev_metrics.map(|m| m.map(|m| m.macro_f1));
        let f1_off = dev_f1.offensive.expect("dev has offensive labels");

        let improved = best
            .as_ref()
            .is_none_or(|(_, best_f1, _)| f1_off >= best_f1 + cfg.min_improvement);
        if improved {
            best = Some((epoch, f1_off, model.clone()));
            since_best = 0;
        } else {
            since_best += 1;
        }

        epochs.push(EpochRecord {
            epoch,
            train_loss,
            dev_macro_f1: dev_f1,
            selected,
            cumulative_selected: cumulative,
            loss_weights,
            uncertainty_w_off: (cfg.uncertainty_mode == UncertaintyMode::Dynamic).then_some(w_off),
            selection_digest: selection_digest(&epoch_selected),
        });
        selections.push(epoch_selected);
        prev_losses = Some(train_loss);
        prev_dev_f1 = Some(f1_off);

        if since_best >= cfg.patience {
            stopped_early = true;
            break;
        }
    }

    let (best_epoch, best_f1, best_model) = best.expect("at least one epoch runs");
    let test_metrics = evaluate(&best_model.params, test)?;

    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        config_hash: cfg.hash(),
        data: DataSummary {
            train: train.len(),
            dev: dev.len(),
            test: test.len(),
        },
        epochs,
        best_epoch,
        best_dev_offensive_macro_f1: best_f1,
        stopped_early,
        cumulative_selected: cumulative,
        test: test_metrics,
    };
    Ok(TrainOutcome {
        report,
        model: best_model,
        selections,
    })
}

/// Indices (into `train`) of the batch members that receive a gradient.
fn select_in_batch(
    cfg: &TrainConfig,
    params: &Params,
    train: &[Example],
    chunk: &[usize],
    w_off: f64,
) -> Result<Vec<usize>, ModelError> {
    let k = match (cfg.uncertainty_mode, cfg.k_selected) {
        (UncertaintyMode::None, _) | (_, SelectionSize::All) => return Ok(chunk.to_vec()),
        (_, SelectionSize::Top(k)) if k >= chunk.len() => return Ok(chunk.to_vec()),
        (_, SelectionSize::Top(k)) => k,
    };
    // Scored in parallel; collect keeps batch order, so selection is deterministic.
    let scores: Vec<f64> = chunk
        .par_iter()
        .map(|&i| {
            let h = task_entropies(params.predict_proba(&train[i].features)?);
            Ok(match cfg.uncertainty_mode {
                UncertaintyMode::Equal => combine_equal(h),
                UncertaintyMode::Weighted => combine_weighted(h, cfg.uncertainty_weights),
                UncertaintyMode::Dynamic => combine_dynamic(h, w_off, &cfg.dynamic),
                UncertaintyMode::None => unreachable!("handled above"),
            })
        })
        .collect::<Result<_, ModelError>>()?;
    Ok(select_top_k(&scores, k)
        .into_iter()
        .map(|p| chunk[p])
        .collect())
}
