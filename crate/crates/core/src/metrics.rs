//! Margin statistics and balanced evaluation computed from logits.
//!
//! The margin of an example is its true-class logit minus the best other
//! logit. Class margins average those per class; the margin gap compares
//! count-weighted majority and minority class margins.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: Scalar>(row: ArrayView1<'_, T>) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// `z_y - max_{j≠y} z_j`.
pub fn example_margin<T: Scalar>(logits: ArrayView1<'_, T>, label: usize) -> T {
    let other = logits
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label)
        .map(|(_, &v)| v)
        .fold(T::neg_infinity(), T::max);
    logits[label] - other
}

pub fn example_margins<T: Scalar>(logits: &Array2<T>, labels: &[usize]) -> Result<Vec<T>> {
    check_rows(logits, labels)?;
    Ok(logits
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(row, &y)| example_margin(row, y))
        .collect())
}

fn check_rows<T>(logits: &Array2<T>, labels: &[usize]) -> Result<()> {
    if logits.nrows() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} logit rows but {} labels",
            logits.nrows(),
            labels.len()
        )));
    }
    if logits.ncols() < 2 {
        return Err(Error::ShapeMismatch("margins need at least 2 classes".into()));
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= logits.ncols()) {
        return Err(Error::ShapeMismatch(format!(
            "label {y} outside {} logit columns",
            logits.ncols()
        )));
    }
    Ok(())
}

/// Mean example margin of every class.
pub fn class_margins<T: Scalar>(logits: &Array2<T>, labels: &[usize], k: usize) -> Result<Vec<T>> {
    if logits.ncols() != k {
        return Err(Error::ShapeMismatch(format!(
            "{} logit columns for K = {k}",
            logits.ncols()
        )));
    }
    let margins = example_margins(logits, labels)?;
    let mut sums = vec![T::zero(); k];
    let mut counts = vec![0usize; k];
    for (&m, &y) in margins.iter().zip(labels) {
        sums[y] += m;
        counts[y] += 1;
    }
    sums.into_iter()
        .zip(counts)
        .enumerate()
        .map(|(j, (s, c))| {
            if c == 0 {
                Err(Error::EmptyClass(j))
            } else {
                Ok(s / T::of_usize(c))
            }
        })
        .collect()
}

/// Class `j` is majority iff `n_j` exceeds `1/K` of all training examples.
pub fn majority_split(train_counts: &[usize]) -> Vec<bool> {
    let total: usize = train_counts.iter().sum();
    let k = train_counts.len();
    train_counts.iter().map(|&n| n * k > total).collect()
}

pub fn is_degenerate_split(mask: &[bool]) -> bool {
    !(mask.iter().any(|&m| m) && mask.iter().any(|&m| !m))
}

/// Count-weighted mean majority margin minus count-weighted mean minority
/// margin. Negative values mean the minority classes enjoy larger margins.
pub fn margin_gap<T: Scalar>(
    class_margins: &[T],
    train_counts: &[usize],
    majority_mask: &[bool],
) -> Result<T> {
    if class_margins.len() != train_counts.len() || train_counts.len() != majority_mask.len() {
        return Err(Error::ShapeMismatch(
            "margins, counts and mask differ in length".into(),
        ));
    }
    if is_degenerate_split(majority_mask) {
        return Err(Error::DegenerateSplit(
            "need at least one majority and one minority class".into(),
        ));
    }
    let weighted_mean = |want: bool| {
        let (mut num, mut den) = (T::zero(), T::zero());
        for ((&g, &n), &m) in class_margins.iter().zip(train_counts).zip(majority_mask) {
            if m == want {
                num += T::of_usize(n) * g;
                den += T::of_usize(n);
            }
        }
        num / den
    };
    Ok(weighted_mean(true) - weighted_mean(false))
}

/// Mean of the negative and of the non-negative example margins, pooled
/// within the majority and within the minority group. `None` marks an empty
/// part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginDecomposition<T> {
    pub majority_negative: Option<T>,
    pub majority_nonnegative: Option<T>,
    pub minority_negative: Option<T>,
    pub minority_nonnegative: Option<T>,
}

pub fn margin_decomposition<T: Scalar>(
    margins: &[T],
    labels: &[usize],
    majority_mask: &[bool],
) -> Result<MarginDecomposition<T>> {
    if margins.len() != labels.len() {
        return Err(Error::ShapeMismatch("margins and labels differ in length".into()));
    }
    // [majority?][nonnegative?] -> (sum, count)
    let mut acc = [[(T::zero(), 0usize); 2]; 2];
    for (&g, &y) in margins.iter().zip(labels) {
        let group = *majority_mask.get(y).ok_or_else(|| {
            Error::ShapeMismatch(format!("label {y} outside mask of {}", majority_mask.len()))
        })?;
        let cell = &mut acc[usize::from(group)][usize::from(g >= T::zero())];
        cell.0 += g;
        cell.1 += 1;
    }
    let mean = |(s, c): (T, usize)| (c > 0).then(|| s / T::of_usize(c));
    Ok(MarginDecomposition {
        majority_negative: mean(acc[1][0]),
        majority_nonnegative: mean(acc[1][1]),
        minority_negative: mean(acc[0][0]),
        minority_nonnegative: mean(acc[0][1]),
    })
}

/// Ideal per-class margins `C · n_j^(-1/4)`.
pub fn theoretical_margins<T: Scalar>(train_counts: &[usize], c: T) -> Vec<T> {
    train_counts
        .iter()
        .map(|&n| c * T::of_usize(n).powf(T::of(-0.25)))
        .collect()
}

/// Least-squares fit without intercept of the ideal margins (`C = 1`) by the
/// observed class margins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L2Fit<T> {
    /// `a` minimizing `Σ (a·γ̄_j - t_j)²`.
    pub scale: T,
    /// The minimized sum of squares.
    pub error: T,
}

pub fn l2_fit_error<T: Scalar>(class_margins: &[T], train_counts: &[usize]) -> Result<L2Fit<T>> {
    if class_margins.len() != train_counts.len() {
        return Err(Error::ShapeMismatch("margins and counts differ in length".into()));
    }
    let target = theoretical_margins(train_counts, T::one());
    let gg: T = class_margins.iter().map(|&g| g * g).sum();
    let gt: T = class_margins.iter().zip(&target).map(|(&g, &t)| g * t).sum();
    let scale = if gg > T::zero() { gt / gg } else { T::zero() };
    let error = class_margins
        .iter()
        .zip(&target)
        .map(|(&g, &t)| (scale * g - t) * (scale * g - t))
        .sum();
    Ok(L2Fit { scale, error })
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks<T: Scalar>(xs: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![T::zero(); xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = T::of_usize(start + 1 + end) / T::of(2.0);
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman_rho<T: Scalar>(xs: &[T], ys: &[T]) -> Result<T> {
    if xs.len() != ys.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} xs vs {} ys",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::ConstantInput(format!(
            "need at least 3 points, got {}",
            xs.len()
        )));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = T::of_usize(xs.len());
    let mx = rx.iter().copied().sum::<T>() / n;
    let my = ry.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(Error::ConstantInput("an input is constant".into()));
    }
    let rho = sxy / (sxx * syy).sqrt();
    Ok(rho.max(-T::one()).min(T::one()))
}

/// Fraction of correct argmax predictions within each class.
pub fn per_class_accuracy<T: Scalar>(logits: &Array2<T>, labels: &[usize]) -> Result<Vec<f64>> {
    check_rows(logits, labels)?;
    let k = logits.ncols();
    let mut hits = vec![0usize; k];
    let mut totals = vec![0usize; k];
    for (row, &y) in logits.rows().into_iter().zip(labels) {
        totals[y] += 1;
        if argmax(row) == y {
            hits[y] += 1;
        }
    }
    if totals.windows(2).any(|w| w[0] != w[1]) {
        log::warn!("evaluation set is not class-balanced; reporting the macro average");
    }
    hits.into_iter()
        .zip(totals)
        .enumerate()
        .map(|(j, (h, t))| {
            if t == 0 {
                Err(Error::EmptyClass(j))
            } else {
                Ok(h as f64 / t as f64)
            }
        })
        .collect()
}

/// Unweighted mean of per-class accuracies.
pub fn balanced_accuracy<T: Scalar>(logits: &Array2<T>, labels: &[usize]) -> Result<f64> {
    let per = per_class_accuracy(logits, labels)?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

/// Every margin statistic for one model on one evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub per_class_margin: Vec<f64>,
    /// Absent when the training histogram has no majority/minority split.
    pub margin_gap: Option<f64>,
    pub majority_mask: Vec<bool>,
    pub decomposition: MarginDecomposition<f64>,
    pub l2_fit_error: f64,
    pub l2_fit_scale: f64,
    pub balanced_accuracy: f64,
    pub per_class_accuracy: Vec<f64>,
}

/// `train_counts` are the training-set class sizes `n_j`; they set the
/// majority split and the gap weights even though margins come from the
/// evaluation set.
pub fn margin_report<T: Scalar>(
    logits: &Array2<T>,
    labels: &[usize],
    train_counts: &[usize],
) -> Result<MarginReport> {
    let k = logits.ncols();
    if train_counts.len() != k {
        return Err(Error::ShapeMismatch(format!(
            "{} train counts for K = {k}",
            train_counts.len()
        )));
    }
    let margins = example_margins(logits, labels)?;
    let per_class = class_margins(logits, labels, k)?;
    let mask = majority_split(train_counts);
    let gap = match margin_gap(&per_class, train_counts, &mask) {
        Ok(g) => Some(g.f64()),
        Err(Error::DegenerateSplit(_)) => None,
        Err(e) => return Err(e),
    };
    let d = margin_decomposition(&margins, labels, &mask)?;
    let fit = l2_fit_error(&per_class, train_counts)?;
    let per_class_acc = per_class_accuracy(logits, labels)?;
    let f = |o: Option<T>| o.map(Scalar::f64);
    Ok(MarginReport {
        per_class_margin: per_class.iter().map(|&g| g.f64()).collect(),
        margin_gap: gap,
        majority_mask: mask,
        decomposition: MarginDecomposition {
            majority_negative: f(d.majority_negative),
            majority_nonnegative: f(d.majority_nonnegative),
            minority_negative: f(d.minority_negative),
            minority_nonnegative: f(d.minority_nonnegative),
        },
        l2_fit_error: fit.error.f64(),
        l2_fit_scale: fit.scale.f64(),
        balanced_accuracy: per_class_acc.iter().sum::<f64>() / k as f64,
        per_class_accuracy: per_class_acc,
    })
}

/// Logits as CSV: one row per example, one column per class, no header.
pub fn logits_to_csv<T: Scalar>(logits: &Array2<T>) -> String {
    let mut out = String::new();
    for row in logits.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_logits_csv<T: Scalar>(text: &str) -> Result<Array2<T>> {
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<T> = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map(T::of).map_err(|e| Error::Parse {
                    row: line_no + 1,
                    message: format!("bad logit {f:?}: {e}"),
                })
            })
            .collect::<Result<_>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    row: line_no + 1,
                    message: format!("expected {w} columns, found {}", row.len()),
                })
            }
            Some(_) => {}
        }
        values.extend(row);
        rows += 1;
    }
    let width = width.ok_or(Error::Parse {
        row: 0,
        message: "no logit rows".into(),
    })?;
    Array2::from_shape_vec((rows, width), values).map_err(|e| Error::ShapeMismatch(e.to_string()))
}

pub fn read_logits_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<Array2<T>> {
    parse_logits_csv(&std::fs::read_to_string(path)?)
}
