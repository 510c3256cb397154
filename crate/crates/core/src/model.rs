//! Hard-parameter-sharing classifier: one shared ReLU layer over the encoder
//! output feeding a linear binary head per task, trained with BCE-on-logits
//! and AdamW.

use crate::corpus::Labels;
use crate::encoder::FeatureVector;
use crate::task::{Task, TaskTriple};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type TaskLogits = TaskTriple<f64>;
pub type TaskProbabilities = TaskTriple<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("feature dimension {found} does not match model dimension {expected}")]
    DimMismatch { expected: usize, found: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("all task weights are zero")]
    NoActiveTask,
    #[error("task weight for {task} is negative or non-finite: {weight}")]
    BadWeight { task: Task, weight: f64 },
    #[error("non-finite loss or gradient at step {step} (losses: {losses:?})")]
    NonFinite { step: u64, losses: TaskTriple<f64> },
}

/// One encoded sample and its labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub features: FeatureVector,
    pub labels: Labels,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Decoupled weight decay coefficient.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Head {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Head {
    fn zeros(hidden: usize) -> Self {
        Self {
            weights: vec![0.0; hidden],
            bias: 0.0,
        }
    }
}

/// All trainable tensors. The shared weight matrix is stored row-major with
/// one row of `hidden` values per input feature, so a sparse input touches
/// only its own rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub dim: usize,
    pub hidden: usize,
    pub shared_weights: Vec<f64>,
    pub shared_bias: Vec<f64>,
    pub heads: TaskTriple<Head>,
}

/// Addresses a single scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamId {
    SharedWeight { row: usize, col: usize },
    SharedBias(usize),
    HeadWeight(Task, usize),
    HeadBias(Task),
}

impl Params {
    pub fn zeros(dim: usize, hidden: usize) -> Self {
        Self {
            dim,
            hidden,
            shared_weights: vec![0.0; dim * hidden],
            shared_bias: vec![0.0; hidden],
            heads: TaskTriple::from_fn(|_| Head::zeros(hidden)),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot(dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(dim, hidden);
        let a = (6.0 / (dim + hidden) as f64).sqrt();
        p.shared_weights
            .iter_mut()
            .for_each(|w| *w = rng.random_range(-a..a));
        let a = (6.0 / (hidden + 1) as f64).sqrt();
        for task in Task::ALL {
            p.heads[task]
                .weights
                .iter_mut()
                .for_each(|w| *w = rng.random_range(-a..a));
        }
        p
    }

    pub fn len(&self) -> usize {
        self.shared_weights.len() + self.shared_bias.len() + 3 * (self.hidden + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: ParamId) -> f64 {
        match id {
            ParamId::SharedWeight { row, col } => self.shared_weights[row * self.hidden + col],
            ParamId::SharedBias(j) => self.shared_bias[j],
            ParamId::HeadWeight(t, j) => self.heads[t].weights[j],
            ParamId::HeadBias(t) => self.heads[t].bias,
        }
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut f64 {
        match id {
            ParamId::SharedWeight { row, col } => &mut self.shared_weights[row * self.hidden + col],
            ParamId::SharedBias(j) => &mut self.shared_bias[j],
            ParamId::HeadWeight(t, j) => &mut self.heads[t].weights[j],
            ParamId::HeadBias(t) => &mut self.heads[t].bias,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.shared_weights
            .iter()
            .chain(&self.shared_bias)
            .chain(
                self.heads
                    .values()
                    .iter()
                    .flat_map(|h| h.weights.iter().chain(std::iter::once(&h.bias))),
            )
            .all(|v| v.is_finite())
    }

    fn check_dim(&self, x: &FeatureVector) -> Result<(), ModelError> {
        if x.dim() != self.dim {
            return Err(ModelError::DimMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        Ok(())
    }

    fn pre_activations(&self, x: &FeatureVector) -> Vec<f64> {
        let mut pre = self.shared_bias.clone();
        for (i, xi) in x.iter() {
            let row = &self.shared_weights[i * self.hidden..(i + 1) * self.hidden];
            for (p, w) in pre.iter_mut().zip(row) {
                *p += xi * w;
            }
        }
        pre
    }

    fn head_logits(&self, shared: &[f64]) -> TaskLogits {
        TaskTriple::from_fn(|t| {
            let head = &self.heads[t];
            head.bias
                + head
                    .weights
                    .iter()
                    .zip(shared)
                    .map(|(w, h)| w * h)
                    .sum::<f64>()
        })
    }

    pub fn forward(&self, x: &FeatureVector) -> Result<TaskLogits, ModelError> {
        self.check_dim(x)?;
        let shared: Vec<f64> = self.pre_activations(x).into_iter().map(relu).collect();
        Ok(self.head_logits(&shared))
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> Result<TaskProbabilities, ModelError> {
        Ok(self.forward(x)?.map(sigmoid))
    }
}

// NaN passes through so a corrupted parameter surfaces as a non-finite loss.
fn relu(z: f64) -> f64 {
    if z < 0.0 {
        0.0
    } else {
        z
    }
}

/// Logistic function, split on the sign of `z` so neither branch overflows.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy on a logit: `max(z,0) - z*y + ln(1 + exp(-|z|))`.
pub fn bce_with_logits(logit: f64, label: bool) -> f64 {
    let y = if label { 1.0 } else { 0.0 };
    logit.max(0.0) - logit * y + (-logit.abs()).exp().ln_1p()
}

/// Gradient of the weighted total loss. Shared-weight rows that received no
/// signal are omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// `(row, d/dW[row, ..])`, sorted by row.
    pub shared_rows: Vec<(usize, Vec<f64>)>,
    pub shared_bias: Vec<f64>,
    pub heads: TaskTriple<Head>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> f64 {
        match id {
            ParamId::SharedWeight { row, col } => self
                .shared_rows
                .binary_search_by_key(&row, |(r, _)| *r)
                .map(|k| self.shared_rows[k].1[col])
                .unwrap_or(0.0),
            ParamId::SharedBias(j) => self.shared_bias[j],
            ParamId::HeadWeight(t, j) => self.heads[t].weights[j],
            ParamId::HeadBias(t) => self.heads[t].bias,
        }
    }

    fn all_finite(&self) -> bool {
        self.shared_rows
            .iter()
            .flat_map(|(_, r)| r)
            .all(|v| v.is_finite())
            && self.shared_bias.iter().all(|v| v.is_finite())
            && self
                .heads
                .values()
                .iter()
                .all(|h| h.bias.is_finite() && h.weights.iter().all(|v| v.is_finite()))
    }
}

/// Result of evaluating the weighted objective on a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEvaluation {
    /// Unweighted mean BCE per task over samples labeled for that task.
    pub task_losses: TaskTriple<f64>,
    /// Weights actually applied: zero for tasks with no labeled sample.
    pub effective_weights: TaskTriple<f64>,
    /// `sum_t effective_weight_t * task_loss_t`.
    pub total: f64,
    pub gradients: Gradients,
}

fn check_weights(weights: &TaskTriple<f64>) -> Result<(), ModelError> {
    for (task, &weight) in weights.iter() {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(ModelError::BadWeight { task, weight });
        }
    }
    if weights.sum() <= 0.0 {
        return Err(ModelError::NoActiveTask);
    }
    Ok(())
}

/// Weighted multi-task loss and its analytic gradient.
pub fn loss_and_gradients(
    params: &Params,
    batch: &[&Example],
    weights: TaskTriple<f64>,
) -> Result<LossEvaluation, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    check_weights(&weights)?;
    for ex in batch {
        params.check_dim(&ex.features)?;
    }

    let hidden = params.hidden;
    let labeled: TaskTriple<usize> =
        TaskTriple::from_fn(|t| batch.iter().filter(|ex| ex.labels[t].is_some()).count());
    let effective = TaskTriple::from_fn(|t| if labeled[t] > 0 { weights[t] } else { 0.0 });

    let mut loss_sums = TaskTriple::splat(0.0);
    let mut grad_bias = vec![0.0; hidden];
    let mut grad_heads = TaskTriple::from_fn(|_| Head::zeros(hidden));
    let mut row_grads: Vec<(usize, Vec<f64>)> = Vec::new();

    for ex in batch {
        let pre = params.pre_activations(&ex.features);
        let shared: Vec<f64> = pre.iter().copied().map(relu).collect();
        let logits = params.head_logits(&shared);

        let mut d_shared = vec![0.0; hidden];
        for task in Task::ALL {
            let Some(label) = ex.labels[task] else {
                continue;
            };
            let z = logits[task];
            loss_sums[task] += bce_with_logits(z, label);
            if effective[task] == 0.0 {
                continue;
            }
            let y = if label { 1.0 } else { 0.0 };
            let dz = effective[task] * (sigmoid(z) - y) / labeled[task] as f64;
            let head = &mut grad_heads[task];
            head.bias += dz;
            for j in 0..hidden {
                head.weights[j] += dz * shared[j];
                d_shared[j] += dz * params.heads[task].weights[j];
            }
        }

        let d_pre: Vec<f64> = d_shared
            .iter()
            .zip(&pre)
            .map(|(&d, &p)| if p > 0.0 { d } else { 0.0 })
            .collect();
        for (gb, d) in grad_bias.iter_mut().zip(&d_pre) {
            *gb += d;
        }
        for (i, xi) in ex.features.iter() {
            let row: Vec<f64> = d_pre.iter().map(|d| d * xi).collect();
            row_grads.push((i, row));
        }
    }

    // merge per-sample rows; stable sort keeps batch order within a row
    row_grads.sort_by_key(|(r, _)| *r);
    let mut shared_rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (row, g) in row_grads {
        match shared_rows.last_mut() {
            Some((last, acc)) if *last == row => {
                acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
            }
            _ => shared_rows.push((row, g)),
        }
    }

    let task_losses = TaskTriple::from_fn(|t| {
        if labeled[t] > 0 {
            loss_sums[t] / labeled[t] as f64
        } else {
            0.0
        }
    });
    let total = Task::ALL
        .iter()
        .map(|&t| effective[t] * task_losses[t])
        .sum();
    Ok(LossEvaluation {
        task_losses,
        effective_weights: effective,
        total,
        gradients: Gradients {
            shared_rows,
            shared_bias: grad_bias,
            heads: grad_heads,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    pub hidden: usize,
    pub adam: AdamConfig,
}

/// Parameters plus AdamW moment estimates (same shapes as the parameters).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub config: ModelConfig,
    pub params: Params,
    pub first_moment: Params,
    pub second_moment: Params,
    pub step: u64,
}

struct AdamStep {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    decay: f64,
    bias1: f64,
    bias2: f64,
}

impl AdamStep {
    #[inline]
    fn apply(&self, p: &mut f64, m: &mut f64, v: &mut f64, g: f64) {
        *p -= self.lr * self.decay * *p;
        *m = self.beta1 * *m + (1.0 - self.beta1) * g;
        *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
        let m_hat = *m / self.bias1;
        let v_hat = *v / self.bias2;
        *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
    }
}

impl ModelState {
    pub fn new(config: ModelConfig, rng: &mut impl Rng) -> Self {
        let params = Params::glorot(config.dim, config.hidden, rng);
        Self::from_params(config, params)
    }

    pub fn from_params(config: ModelConfig, params: Params) -> Self {
        let zeros = Params::zeros(params.dim, params.hidden);
        Self {
            config,
            params,
            first_moment: zeros.clone(),
            second_moment: zeros,
            step: 0,
        }
    }

    pub fn forward(&self, x: &FeatureVector) -> Result<TaskLogits, ModelError> {
        self.params.forward(x)
    }

    /// One AdamW step on the weighted loss of `batch`. Returns the unweighted
    /// per-task mean losses. Heads whose effective weight is zero are left
    /// untouched (no moment update, no decay). On a non-finite loss or
    /// gradient the state is not modified.
    pub fn step(
        &mut self,
        batch: &[&Example],
        weights: TaskTriple<f64>,
        lr: f64,
    ) -> Result<TaskTriple<f64>, ModelError> {
        let eval = loss_and_gradients(&self.params, batch, weights)?;
        if !eval.total.is_finite() || !eval.task_losses.all_finite() || !eval.gradients.all_finite()
        {
            return Err(ModelError::NonFinite {
                step: self.step + 1,
                losses: eval.task_losses,
            });
        }

        self.step += 1;
        let adam = self.config.adam;
        let t = self.step as i32;
        let upd = AdamStep {
            lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.epsilon,
            decay: adam.weight_decay,
            bias1: 1.0 - adam.beta1.powi(t),
            bias2: 1.0 - adam.beta2.powi(t),
        };
        let grads = &eval.gradients;
        let hidden = self.params.hidden;

        let rows = &grads.shared_rows;
        self.params
            .shared_weights
            .par_chunks_mut(hidden)
            .zip(self.first_moment.shared_weights.par_chunks_mut(hidden))
            .zip(self.second_moment.shared_weights.par_chunks_mut(hidden))
            .enumerate()
            .with_min_len(512)
            .for_each(|(row, ((p, m), v))| {
                let g = rows
                    .binary_search_by_key(&row, |(r, _)| *r)
                    .ok()
                    .map(|k| &rows[k].1);
                for j in 0..hidden {
                    let gj = g.map_or(0.0, |g| g[j]);
                    upd.apply(&mut p[j], &mut m[j], &mut v[j], gj);
                }
            });
        for j in 0..hidden {
            upd.apply(
                &mut self.params.shared_bias[j],
                &mut self.first_moment.shared_bias[j],
                &mut self.second_moment.shared_bias[j],
                grads.shared_bias[j],
            );
        }

        for task in Task::ALL {
            if eval.effective_weights[task] == 0.0 {
                continue;
            }
            let (p, m, v, g) = (
                &mut self.params.heads[task],
                &mut self.first_moment.heads[task],
                &mut self.second_moment.heads[task],
                &grads.heads[task],
            );
            for j in 0..hidden {
                upd.apply(
                    &mut p.weights[j],
                    &mut m.weights[j],
                    &mut v.weights[j],
                    g.weights[j],
                );
            }
            upd.apply(&mut p.bias, &mut m.bias, &mut v.bias, g.bias);
        }

        Ok(eval.task_losses)
    }
}
