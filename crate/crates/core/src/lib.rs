//! Multi-task active learning for offensive-speech detection in Arabic tweets.
//!
//! The pipeline: [`corpus`] loads tab-separated splits, [`textprep`] cleans
//! tweets and handles emojis, [`encoder`] turns cleaned text into sparse
//! hashed n-gram vectors, [`model`] is a shared-layer classifier with one head
//! per task (offensive, violent, vulgar), [`acquisition`] scores samples by
//! prediction entropy, and [`trainer`] ties it together with task loss
//! weighting, early stopping and per-batch top-k selection.

pub mod acquisition;
pub mod checkpoint;
pub mod corpus;
pub mod encoder;
pub mod metrics;
pub mod model;
pub mod report;
pub mod seed;
pub mod synthetic;
pub mod task;
pub mod textprep;
pub mod trainer;

pub use task::{Task, TaskTriple};
