//! Experiment files: JSON with `dataset`, `method`, `mixer`, `train` and
//! `seeds` sections. Unknown keys are rejected everywhere.

use std::fs;
use std::path::{Path, PathBuf};

use imbmix::augment::{LambdaMode, MixMethod, MixerConfig};
use imbmix::data::{ImbalanceKind, ImbalanceSpec};
use imbmix::model::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::methods::resolve_method;

/// Where the balanced pool comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    /// Gaussian clusters; the pool holds `n_max + n_eval` rows per class.
    Blobs {
        num_classes: usize,
        dim: usize,
        sep: f64,
        #[serde(default)]
        seed: u64,
    },
    Csv {
        path: PathBuf,
        #[serde(default)]
        header: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub source: Source,
    /// Applied to what is left of the pool after the evaluation hold-out.
    pub imbalance: ImbalanceSpec,
    /// Held-out rows per class for the balanced evaluation set.
    pub n_eval: usize,
}

impl DatasetConfig {
    /// Head-class size used for the blob pool.
    pub fn n_max(&self) -> usize {
        self.imbalance.n_max.unwrap_or(DEFAULT_N_MAX)
    }
}

pub const DEFAULT_N_MAX: usize = 1000;

/// Mixer hyper-parameters; the mixing rule itself comes from the method name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixerParams {
    pub alpha: f64,
    pub omega: f64,
    pub tau: f64,
    pub p_majority: f64,
    pub k_neighbors: usize,
    pub lambda_mode: LambdaMode,
}

impl Default for MixerParams {
    fn default() -> Self {
        let m = MixerConfig::new(MixMethod::Mixup);
        Self {
            alpha: m.alpha,
            omega: m.omega,
            tau: m.tau,
            p_majority: m.p_majority,
            k_neighbors: m.k_neighbors,
            lambda_mode: m.lambda_mode,
        }
    }
}

impl MixerParams {
    pub fn for_method(&self, method: MixMethod) -> MixerConfig {
        MixerConfig {
            method,
            alpha: self.alpha,
            omega: self.omega,
            tau: self.tau,
            p_majority: self.p_majority,
            k_neighbors: self.k_neighbors,
            lambda_mode: self.lambda_mode,
        }
    }
}

fn default_seeds() -> Vec<u64> {
    (1..=5).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub method: String,
    #[serde(default)]
    pub mixer: MixerParams,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// The default desk-scale benchmark: 10 blobs in 16 dimensions, head
    /// class of 1000, MLP-64 for 100 epochs, seeds 1..=5.
    pub fn blob_benchmark(method: &str, rho: f64, kind: ImbalanceKind) -> Self {
        let imbalance = match kind {
            ImbalanceKind::LongTailed => ImbalanceSpec::long_tailed(rho, 0),
            ImbalanceKind::Step => ImbalanceSpec::step(rho, 0.5, 0),
        };
        Self {
            dataset: DatasetConfig {
                source: Source::Blobs {
                    num_classes: 10,
                    dim: 16,
                    sep: BENCHMARK_SEP,
                    seed: 0,
                },
                imbalance: ImbalanceSpec {
                    n_max: Some(DEFAULT_N_MAX),
                    ..imbalance
                },
                n_eval: 200,
            },
            method: method.to_string(),
            mixer: MixerParams::default(),
            train: TrainConfig::default(),
            seeds: default_seeds(),
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Json {
            path: PathBuf::from("<config>"),
            source: e,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| HarnessError::File {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|source| HarnessError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        // CSV paths are relative to the config file
        if let Source::Csv { path: csv, .. } = &mut cfg.dataset.source {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("at least one seed is required".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(HarnessError::Config("seeds must be distinct".into()));
        }
        let resolved = resolve_method(&self.method)?;
        if let Some(m) = resolved.mixer {
            self.mixer.for_method(m).validate()?;
        }
        resolved.apply(&self.train).validate()?;
        if self.dataset.n_eval == 0 {
            return Err(HarnessError::Config("n_eval must be >= 1".into()));
        }
        Ok(())
    }
}

/// Class separation of the default benchmark, tuned so that the
/// long-tailed ρ = 100 split leaves the tail classes clearly under-fit by
/// plain ERM.
pub const BENCHMARK_SEP: f64 = 3.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{
                "dataset": {
                    "source": {"kind": "blobs", "num_classes": 3, "dim": 4, "sep": 3.0},
                    "imbalance": {"kind": "long_tailed", "rho": 10, "n_max": 50},
                    "n_eval": 10
                },
                "method": "mamix-drw"
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.seeds, vec![1, 2, 3, 4, 5]);
        assert_eq!(cfg.mixer, MixerParams::default());
        assert_eq!(cfg.train, TrainConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        let base = r#"{"dataset": {"source": {"kind": "blobs", "num_classes": 3, "dim": 4, "sep": 3.0},
            "imbalance": {"kind": "step", "rho": 10}, "n_eval": 5}, "method": "erm""#;
        assert!(ExperimentConfig::from_json(&format!("{base}}}")).is_ok());
        assert!(ExperimentConfig::from_json(&format!("{base}, \"sedes\": [1]}}")).is_err());
        assert!(ExperimentConfig::from_json(&format!("{base}, \"mixer\": {{\"alfa\": 1}}}}")).is_err());
        assert!(ExperimentConfig::from_json(&format!("{base}, \"train\": {{\"epoch\": 1}}}}")).is_err());
    }

    #[test]
    fn bad_values_rejected() {
        let mut cfg = ExperimentConfig::blob_benchmark("mixup", 10.0, ImbalanceKind::LongTailed);
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::blob_benchmark("mixup", 10.0, ImbalanceKind::LongTailed);
        cfg.mixer.alpha = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::blob_benchmark("fancymix", 10.0, ImbalanceKind::LongTailed);
        assert!(matches!(cfg.validate(), Err(HarnessError::UnknownMethod { .. })));
    }

    #[test]
    fn benchmark_round_trips() {
        let cfg = ExperimentConfig::blob_benchmark("erm", 100.0, ImbalanceKind::Step);
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }
}
