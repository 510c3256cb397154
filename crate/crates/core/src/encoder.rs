//! Text encoders: the [`Encoder`] contract and a signed feature-hashing
//! implementation over word and character n-grams.

use crate::textprep::CleanText;
use serde::{Deserialize, Serialize};
use siphasher::sip::SipHasher13;
use std::collections::BTreeMap;
use std::hash::Hasher;
use thiserror::Error;

/// Sparse vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    dim: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("index {index} out of range for dimension {dim}")]
    OutOfRange { index: usize, dim: usize },
    #[error("indices must be strictly increasing")]
    Unsorted,
    #[error("indices and values differ in length")]
    LengthMismatch,
    #[error("encoder dimension {0} is not a power of two (or exceeds 2^32)")]
    BadDim(usize),
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
    #[error("encoder has no n-gram orders")]
    NoOrders,
}

impl FeatureVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from parallel index/value lists; zero values are dropped.
    pub fn new(dim: usize, indices: Vec<u32>, values: Vec<f64>) -> Result<Self, FeatureError> {
        if indices.len() != values.len() {
            return Err(FeatureError::LengthMismatch);
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FeatureError::Unsorted);
        }
        if let Some(&last) = indices.last() {
            if last as usize >= dim {
                return Err(FeatureError::OutOfRange {
                    index: last as usize,
                    dim,
                });
            }
        }
        let (indices, values) = indices
            .into_iter()
            .zip(values)
            .filter(|&(_, v)| v != 0.0)
            .unzip();
        Ok(Self {
            dim,
            indices,
            values,
        })
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != 0.0)
            .map(|(i, &v)| (i as u32, v))
            .unzip();
        Self {
            dim: dense.len(),
            indices,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .map(|&i| i as usize)
            .zip(self.values.iter().copied())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            dense[i] = v;
        }
        dense
    }
}

/// Anything that turns cleaned text into a fixed-width feature vector.
///
/// A transformer-backed encoder only needs to implement this trait to be used
/// by the trainer.
pub trait Encoder: Send + Sync {
    fn dim(&self) -> usize;
    fn encode(&self, text: &CleanText) -> FeatureVector;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    /// Output dimensionality, a power of two.
    pub dim: usize,
    /// Word n-gram orders (contiguous token windows).
    pub word_orders: Vec<usize>,
    /// Character n-gram orders, taken within each token padded with `<` and `>`.
    pub char_orders: Vec<usize>,
    pub hash_seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            dim: 1 << 18,
            word_orders: vec![1, 2],
            char_orders: vec![3, 4],
            hash_seed: 0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if !self.dim.is_power_of_two() || self.dim > 1 << 32 {
            return Err(FeatureError::BadDim(self.dim));
        }
        if self.word_orders.is_empty() && self.char_orders.is_empty() {
            return Err(FeatureError::NoOrders);
        }
        if self
            .word_orders
            .iter()
            .chain(&self.char_orders)
            .any(|&n| n == 0)
        {
            return Err(FeatureError::ZeroOrder);
        }
        Ok(())
    }
}

/// Signed feature hashing: each n-gram lands on `hash mod dim` with a ±1 sign
/// drawn from an independent hash bit; colliding contributions add up.
#[derive(Debug, Clone)]
pub struct HashingEncoder {
    cfg: EncoderConfig,
}

const WORD_TAG: u8 = 0x01;
const CHAR_TAG: u8 = 0x02;

impl HashingEncoder {
    pub fn new(cfg: EncoderConfig) -> Result<Self, FeatureError> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.cfg
    }

    fn hash(&self, tag: u8, order: usize, parts: &[&str]) -> (u32, f64) {
        let mut h = SipHasher13::new_with_keys(self.cfg.hash_seed, 0x6d74_616c_6e67_7261);
        h.write_u8(tag);
        h.write_u8(order as u8);
        for part in parts {
            h.write(part.as_bytes());
            h.write_u8(0xff);
        }
        let bits = h.finish();
        let index = (bits & (self.cfg.dim as u64 - 1)) as u32;
        let sign = if bits >> 63 == 0 { 1.0 } else { -1.0 };
        (index, sign)
    }

    /// Hashed counts before normalization, keyed by index.
    pub fn encode_raw(&self, text: &CleanText) -> BTreeMap<u32, f64> {
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        let tokens = &text.tokens;
        let words: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();

        for &order in &self.cfg.word_orders {
            for (start, window) in words.windows(order).enumerate() {
                let weight: f64 = tokens[start..start + order]
                    .iter()
                    .map(|t| t.weight)
                    .product();
                let (index, sign) = self.hash(WORD_TAG, order, window);
                *acc.entry(index).or_default() += sign * weight;
            }
        }

        if !self.cfg.char_orders.is_empty() {
            for token in tokens {
                let padded: Vec<char> = std::iter::once('<')
                    .chain(token.text.chars())
                    .chain(std::iter::once('>'))
                    .collect();
                for &order in &self.cfg.char_orders {
                    for window in padded.windows(order) {
                        let gram: String = window.iter().collect();
                        let (index, sign) = self.hash(CHAR_TAG, order, &[&gram]);
                        *acc.entry(index).or_default() += sign * token.weight;
                    }
                }
            }
        }
        acc
    }
}

impl Encoder for HashingEncoder {
    fn dim(&self) -> usize {
        self.cfg.dim
    }

    /// L2-normalized hashed n-gram vector; empty text gives the zero vector.
    fn encode(&self, text: &CleanText) -> FeatureVector {
        let raw = self.encode_raw(text);
        let norm = raw.values().map(|v| v * v).sum::<f64>().sqrt();
        let (indices, values) = raw
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|(i, v)| (i, v / norm))
            .unzip();
        FeatureVector {
            dim: self.cfg.dim,
            indices,
            values,
        }
    }
}
