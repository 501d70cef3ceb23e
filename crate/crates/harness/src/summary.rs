//! Mean ± std tables derived from run records.

use std::fmt::Write as _;

use imbmix::data::ImbalanceKind;
use serde::{Deserialize, Serialize};

use crate::config::DatasetConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::RunRecord;

/// Mean and sample (n−1) standard deviation; a single value has std 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        if values.iter().all(|&v| v == values[0]) {
            // sum / n can miss v by an ulp; keep constant columns exact
            return Some(Self {
                mean: values[0],
                std: 0.0,
            });
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(Self { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub method: String,
    pub rho: f64,
    pub kind: ImbalanceKind,
    pub dataset: DatasetConfig,
    pub seeds: Vec<u64>,
    /// Set when only one seed ran, so the zero std carries no information.
    pub single_run: bool,
    pub balanced_accuracy: Stat,
    /// Over the runs that have a majority/minority split; absent if none.
    pub margin_gap: Option<Stat>,
    pub l2_fit_error: Stat,
    pub per_class_accuracy: Vec<Stat>,
}

/// Aggregate the records of one method on one dataset.
pub fn summarize(records: &[RunRecord]) -> Result<SummaryTable> {
    let first = records
        .first()
        .ok_or_else(|| HarnessError::Config("no records to summarize".into()))?;
    if let Some(r) = records.iter().find(|r| r.method != first.method) {
        return Err(HarnessError::Config(format!(
            "records mix methods `{}` and `{}`",
            first.method, r.method
        )));
    }
    if records.iter().any(|r| r.dataset != first.dataset) {
        return Err(HarnessError::DatasetMismatch(
            "records of one summary differ".into(),
        ));
    }
    let col = |f: &dyn Fn(&RunRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
    let gaps: Vec<f64> = records.iter().filter_map(|r| r.margin_gap).collect();
    let k = first.per_class_accuracy.len();
    Ok(SummaryTable {
        method: first.method.clone(),
        rho: first.dataset.imbalance.rho,
        kind: first.dataset.imbalance.kind,
        dataset: first.dataset.clone(),
        seeds: records.iter().map(|r| r.seed).collect(),
        single_run: records.len() == 1,
        balanced_accuracy: Stat::of(&col(&|r| r.balanced_accuracy)).expect("non-empty"),
        margin_gap: Stat::of(&gaps),
        l2_fit_error: Stat::of(&col(&|r| r.margins.l2_fit_error)).expect("non-empty"),
        per_class_accuracy: (0..k)
            .map(|j| Stat::of(&col(&|r| r.per_class_accuracy[j])).expect("non-empty"))
            .collect(),
    })
}

pub fn kind_name(kind: ImbalanceKind) -> &'static str {
    match kind {
        ImbalanceKind::LongTailed => "long_tailed",
        ImbalanceKind::Step => "step",
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

pub fn to_csv(tables: &[SummaryTable]) -> String {
    let mut s = String::from(
        "method,rho,kind,runs,balanced_accuracy_mean,balanced_accuracy_std,margin_gap_mean,margin_gap_std,l2_fit_error_mean\n",
    );
    for t in tables {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            t.method,
            t.rho,
            kind_name(t.kind),
            t.seeds.len(),
            t.balanced_accuracy.mean,
            t.balanced_accuracy.std,
            opt(t.margin_gap.map(|g| g.mean)),
            opt(t.margin_gap.map(|g| g.std)),
            t.l2_fit_error.mean,
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_conventions() {
        assert_eq!(Stat::of(&[]), None);
        assert_eq!(Stat::of(&[0.7]), Some(Stat { mean: 0.7, std: 0.0 }));
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Stat::of(&[0.4; 5]).unwrap().std, 0.0);
    }
}
