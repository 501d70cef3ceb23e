//! Multi-seed runs and their on-disk layout.
//!
//! ```text
//! <out>/config.json            resolved config snapshot
//! <out>/records/seed-<s>.json  one RunRecord per seed
//! <out>/logits/seed-<s>.csv    evaluation logits per seed
//! <out>/eval_labels.csv        evaluation labels, one per line
//! <out>/split.json             selected training rows per class
//! <out>/timing.json            wall-clock seconds per seed
//! <out>/summary.json, summary.csv
//! ```
//!
//! Wall time lives in its own file so that records are byte-identical
//! across reruns.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use imbmix::augment::smote_oversample;
use imbmix::data::{
    load_csv, split_balanced_eval, subsample_imbalanced, synth_gaussian_blobs, SplitManifest,
};
use imbmix::metrics::{logits_to_csv, margin_report, MarginReport};
use imbmix::model::{export_logits, train, TrainConfig};
use imbmix::{rng, Dataset64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{DatasetConfig, ExperimentConfig, Source};
use crate::error::{HarnessError, Result};
use crate::methods::{resolve_method, Preprocess};
use crate::summary::{summarize, SummaryTable};

/// Imbalanced training set and balanced evaluation set shared by all seeds.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Dataset64,
    pub eval: Dataset64,
    pub manifest: SplitManifest,
}

/// Hold out `n_eval` rows per class first, then subsample the rest.
pub fn prepare_data(cfg: &DatasetConfig) -> Result<PreparedData> {
    let (pool, split_seed) = match &cfg.source {
        Source::Blobs {
            num_classes,
            dim,
            sep,
            seed,
        } => (
            synth_gaussian_blobs::<f64>(*num_classes, *dim, cfg.n_max() + cfg.n_eval, *sep, *seed)?,
            *seed,
        ),
        Source::Csv { path, header } => (load_csv::<f64>(path, *header)?, cfg.imbalance.seed),
    };
    let split = split_balanced_eval(&pool, cfg.n_eval, split_seed)?;
    let (train, manifest) = subsample_imbalanced(&split.train, &cfg.imbalance)?;
    Ok(PreparedData {
        train,
        eval: split.eval,
        manifest,
    })
}

/// Everything measured for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub seed: u64,
    pub dataset: DatasetConfig,
    /// Class sizes `n_j` of the imbalanced training set (before any
    /// oversampling); these set the majority split and gap weights.
    pub train_counts: Vec<usize>,
    pub train: TrainConfig,
    pub balanced_accuracy: f64,
    pub per_class_accuracy: Vec<f64>,
    pub margin_gap: Option<f64>,
    pub final_train_loss: f64,
    pub margins: MarginReport,
}

/// Train and evaluate one seed; also returns the evaluation logits as CSV.
pub fn run_seed(cfg: &ExperimentConfig, data: &PreparedData, seed: u64) -> Result<(RunRecord, String)> {
    let method = resolve_method(&cfg.method)?;
    let train_cfg = TrainConfig {
        seed,
        ..method.apply(&cfg.train)
    };
    let counts = data.train.class_counts();
    let wrap = |source| HarnessError::Seed { seed, source };

    let oversampled;
    let train_ds = match method.preprocess {
        Preprocess::None => &data.train,
        Preprocess::Smote => {
            let k = cfg.mixer.k_neighbors;
            oversampled = smote_oversample(&data.train, k, &mut rng::stream(seed, "smote")).map_err(wrap)?;
            &oversampled
        }
    };
    let mixer = method.mixer.map(|m| cfg.mixer.for_method(m));
    let (params, history) = train(train_ds, mixer.as_ref(), &train_cfg, None).map_err(wrap)?;
    let logits = export_logits(&params, &data.eval).map_err(wrap)?;
    let report = margin_report(&logits, data.eval.labels(), &counts).map_err(wrap)?;
    let record = RunRecord {
        method: method.name,
        seed,
        dataset: cfg.dataset.clone(),
        train_counts: counts,
        train: train_cfg,
        balanced_accuracy: report.balanced_accuracy,
        per_class_accuracy: report.per_class_accuracy.clone(),
        margin_gap: report.margin_gap,
        final_train_loss: history.epochs.last().map_or(f64::NAN, |e| e.loss),
        margins: report,
    };
    Ok((record, logits_to_csv(&logits)))
}

/// Seed, its record and logits CSV (or the error), and wall seconds.
pub type SeedOutcome = (u64, Result<(RunRecord, String)>, f64);

/// All seeds of `cfg` in memory, in seed order. Seeds run in parallel.
pub fn run_records(cfg: &ExperimentConfig, data: &PreparedData) -> Vec<SeedOutcome> {
    cfg.seeds
        .par_iter()
        .map(|&seed| {
            let start = Instant::now();
            let out = run_seed(cfg, data, seed);
            (seed, out, start.elapsed().as_secs_f64())
        })
        .collect()
}

pub fn record_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join("records").join(format!("seed-{seed}.json"))
}

pub(crate) fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| HarnessError::File {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| HarnessError::File {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn to_json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Run every seed, persist the layout above and return the summary.
///
/// A failing seed does not stop the others: completed records are written,
/// then the run reports which seeds failed instead of a summary.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<SummaryTable> {
    cfg.validate()?;
    let data = prepare_data(&cfg.dataset)?;
    write(&out.join("config.json"), to_json(cfg))?;
    write(&out.join("split.json"), to_json(&data.manifest))?;
    let labels: String = data.eval.labels().iter().map(|y| format!("{y}\n")).collect();
    write(&out.join("eval_labels.csv"), labels)?;

    let results = run_records(cfg, &data);
    let mut records = Vec::new();
    let mut timing = BTreeMap::new();
    let mut failed = 0;
    for (seed, result, secs) in results {
        timing.insert(format!("seed-{seed}"), secs);
        match result {
            Ok((record, logits)) => {
                write(&record_path(out, seed), to_json(&record))?;
                write(&out.join("logits").join(format!("seed-{seed}.csv")), logits)?;
                records.push(record);
            }
            Err(e) => {
                match &e {
                    HarnessError::Seed { source, .. } => log::error!("{e}: {source}"),
                    other => log::error!("seed {seed}: {other}"),
                }
                failed += 1;
            }
        }
    }
    write(&out.join("timing.json"), to_json(&timing))?;
    if failed > 0 {
        return Err(HarnessError::PartialRun {
            failed,
            total: cfg.seeds.len(),
            dir: out.to_path_buf(),
        });
    }
    let summary = summarize(&records)?;
    write(&out.join("summary.json"), to_json(&summary))?;
    write(
        &out.join("summary.csv"),
        crate::summary::to_csv(std::slice::from_ref(&summary)),
    )?;
    Ok(summary)
}

pub fn read_record(path: &Path) -> Result<RunRecord> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::File {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })
}
