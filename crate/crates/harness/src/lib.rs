//! Reproducible multi-seed experiments over the `imbmix` core.
//!
//! An experiment file picks a dataset, an imbalance profile, a method name
//! from [`methods::catalog`] and training settings; [`run_experiment`]
//! trains every seed, evaluates margins on a balanced hold-out and writes
//! per-seed records plus a mean ± std summary.

pub mod analysis;
pub mod config;
pub mod error;
pub mod experiment;
pub mod methods;
pub mod summary;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, RunRecord};
pub use methods::resolve_method;
pub use summary::SummaryTable;
