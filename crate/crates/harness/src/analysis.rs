//! Cross-table comparison and the gap-vs-accuracy correlation.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use imbmix::metrics::spearman_rho;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::experiment::{read_record, RunRecord};
use crate::summary::{kind_name, SummaryTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub balanced_accuracy_mean: f64,
    pub balanced_accuracy_std: f64,
    pub margin_gap_mean: Option<f64>,
    /// Differences from the first table.
    pub delta_balanced_accuracy: f64,
    pub delta_margin_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rho: f64,
    pub kind: String,
    pub rows: Vec<ComparisonRow>,
}

/// Side-by-side view of tables that share one dataset spec.
pub fn compare(tables: &[SummaryTable]) -> Result<Comparison> {
    let base = tables
        .first()
        .ok_or_else(|| HarnessError::Config("nothing to compare".into()))?;
    for t in &tables[1..] {
        if t.dataset != base.dataset {
            return Err(HarnessError::DatasetMismatch(format!(
                "`{}` ran on {}, `{}` on {}",
                base.method,
                serde_json::to_string(&base.dataset).unwrap_or_default(),
                t.method,
                serde_json::to_string(&t.dataset).unwrap_or_default(),
            )));
        }
    }
    let gap = |t: &SummaryTable| t.margin_gap.map(|g| g.mean);
    let rows = tables
        .iter()
        .map(|t| ComparisonRow {
            method: t.method.clone(),
            balanced_accuracy_mean: t.balanced_accuracy.mean,
            balanced_accuracy_std: t.balanced_accuracy.std,
            margin_gap_mean: gap(t),
            delta_balanced_accuracy: t.balanced_accuracy.mean - base.balanced_accuracy.mean,
            delta_margin_gap: gap(t).zip(gap(base)).map(|(a, b)| a - b),
        })
        .collect();
    Ok(Comparison {
        rho: base.rho,
        kind: kind_name(base.kind).to_string(),
        rows,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "method,rho,kind,balanced_accuracy_mean,balanced_accuracy_std,margin_gap_mean,delta_balanced_accuracy,delta_margin_gap\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.method,
                self.rho,
                self.kind,
                r.balanced_accuracy_mean,
                r.balanced_accuracy_std,
                cell(r.margin_gap_mean),
                r.delta_balanced_accuracy,
                cell(r.delta_margin_gap),
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub method: String,
    pub seed: u64,
    pub margin_gap: f64,
    pub balanced_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    /// Spearman's rho of margin gap against balanced accuracy.
    pub rho: f64,
    pub points: Vec<ScatterPoint>,
}

/// Records without a margin gap (no majority/minority split) are skipped.
pub fn correlate(records: &[RunRecord]) -> Result<Correlation> {
    let points: Vec<ScatterPoint> = records
        .iter()
        .filter_map(|r| {
            r.margin_gap.map(|g| ScatterPoint {
                method: r.method.clone(),
                seed: r.seed,
                margin_gap: g,
                balanced_accuracy: r.balanced_accuracy,
            })
        })
        .collect();
    if points.len() < 3 {
        return Err(HarnessError::TooFewRecords {
            needed: 3,
            found: points.len(),
        });
    }
    let gaps: Vec<f64> = points.iter().map(|p| p.margin_gap).collect();
    let accs: Vec<f64> = points.iter().map(|p| p.balanced_accuracy).collect();
    Ok(Correlation {
        rho: spearman_rho(&gaps, &accs)?,
        points,
    })
}

impl Correlation {
    pub fn scatter_csv(&self) -> String {
        let mut s = String::from("method,seed,margin_gap,balanced_accuracy\n");
        for p in &self.points {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                p.method, p.seed, p.margin_gap, p.balanced_accuracy
            );
        }
        s
    }
}

/// Records matching a glob such as `runs/*/records/*.json`, in path order.
pub fn load_records(pattern: &str) -> Result<Vec<RunRecord>> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern)?.filter_map(|p| p.ok()).collect();
    paths.sort();
    paths.iter().map(|p| read_record(p)).collect()
}

pub fn load_summary(path: &Path) -> Result<SummaryTable> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::File {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })
}
