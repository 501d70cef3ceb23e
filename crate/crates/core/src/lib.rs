//! Mixup-family data augmentation for imbalanced classification.
//!
//! The crate covers the whole pipeline at desk scale:
//!
//! * [`data`]: balanced sources, long-tailed and step imbalance, balanced
//!   evaluation splits.
//! * [`augment`]: Mixup, Remix, margin-aware Mixup (MAMix), SMOTE-Mix,
//!   Neighbor-Mix, and classic SMOTE oversampling.
//! * [`model`]: linear and MLP classifiers, soft-label cross-entropy, LDAM,
//!   deferred re-weighting (DRW) and the SGD training loop.
//! * [`metrics`]: example and class margins, margin gap, margin
//!   decomposition, fit to the `n^(-1/4)` ideal margins, Spearman
//!   correlation, balanced accuracy.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64` and
//! `*32` aliases below fix the common choices.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod neighbors;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Dataset64 = data::LabeledDataset<f64>;
pub type Dataset32 = data::LabeledDataset<f32>;
pub type Model64 = model::ModelParams<f64>;
pub type Model32 = model::ModelParams<f32>;
pub type MixedBatch64 = augment::MixedBatch<f64>;
pub type MixedBatch32 = augment::MixedBatch<f32>;
