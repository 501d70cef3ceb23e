//! The unified Mixup framework: every method is a choice of pair selection,
//! input mixing factor `λx`, and label mixing factor `λy`.
//!
//! | method        | partner `j`                          | `λy`                      |
//! |---------------|--------------------------------------|---------------------------|
//! | mixup         | random permutation of the batch      | `λx`                      |
//! | remix         | random permutation of the batch      | relabel toward minority   |
//! | mamix         | random permutation of the batch      | margin-aware, see [`lambda_y_mamix`] |
//! | smote_mix     | one of `k` same-class nearest neighbors | hard label of `i`      |
//! | neighbor_mix  | one of `k` nearest neighbors, any class | `λx`                   |
//!
//! Classic SMOTE oversampling lives in [`smote`] and runs once before
//! training instead of per batch.

mod lambda;
mod mixer;
pub mod smote;

pub use lambda::{
    draw_lambdas, lambda_y_mamix, lambda_y_mamix_remix, lambda_y_mixup, lambda_y_remix, mamix_etas,
    sample_lambda_x,
};
pub use mixer::{mix_batch, mix_batch_per_pair, select_pairs, MixedBatch};
pub use smote::{smote_oversample, smote_oversample_traced, SyntheticOrigin};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixMethod {
    Mixup,
    Remix,
    Mamix,
    SmoteMix,
    NeighborMix,
    /// Remix's hard relabeling with MAMix's `λy` as the fallback branch.
    /// Experimental.
    MamixRemix,
}

impl MixMethod {
    pub fn uses_neighbors(self) -> bool {
        matches!(self, Self::SmoteMix | Self::NeighborMix)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Mixup => "mixup",
            Self::Remix => "remix",
            Self::Mamix => "mamix",
            Self::SmoteMix => "smote_mix",
            Self::NeighborMix => "neighbor_mix",
            Self::MamixRemix => "mamix_remix",
        }
    }
}

/// When `λx` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    /// One draw shared by the whole mini-batch.
    #[default]
    PerBatch,
    /// An independent draw for every pair.
    PerPair,
    /// No sampling; every pair uses this value.
    Fixed(f64),
}

fn default_alpha() -> f64 {
    1.0
}
fn default_omega() -> f64 {
    0.25
}
fn default_tau() -> f64 {
    0.5
}
fn default_p_majority() -> f64 {
    3.0
}
fn default_k() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixerConfig {
    pub method: MixMethod,
    /// Beta(α, α) parameter for `λx`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// MAMix margin exponent in `η = n^(-ω)`.
    #[serde(default = "default_omega")]
    pub omega: f64,
    /// Remix threshold on `λx`.
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Remix count ratio above which one class is "P-majority" over another.
    #[serde(default = "default_p_majority")]
    pub p_majority: f64,
    #[serde(default = "default_k")]
    pub k_neighbors: usize,
    #[serde(default)]
    pub lambda_mode: LambdaMode,
}

impl MixerConfig {
    pub fn new(method: MixMethod) -> Self {
        Self {
            method,
            alpha: default_alpha(),
            omega: default_omega(),
            tau: default_tau(),
            p_majority: default_p_majority(),
            k_neighbors: default_k(),
            lambda_mode: LambdaMode::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if !(self.omega > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "omega must be > 0, got {}",
                self.omega
            )));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::InvalidSpec(format!(
                "tau must lie in [0, 1], got {}",
                self.tau
            )));
        }
        if !(self.p_majority > 1.0) {
            return Err(Error::InvalidSpec(format!(
                "p_majority must be > 1, got {}",
                self.p_majority
            )));
        }
        if self.k_neighbors == 0 {
            return Err(Error::InvalidSpec("k_neighbors must be >= 1".into()));
        }
        if let LambdaMode::Fixed(v) = self.lambda_mode {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidSpec(format!("fixed lambda {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}
