//! Soft-label cross-entropy, LDAM, and deferred re-weighting.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const LABEL_SUM_TOLERANCE: f64 = 1e-6;

/// Positive per-class weights with mean 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights<T>(Vec<T>);

impl<T: Scalar> ClassWeights<T> {
    pub fn uniform(k: usize) -> Self {
        Self(vec![T::one(); k])
    }

    /// Rescale raw positive weights to mean 1.
    pub fn normalized(raw: Vec<T>) -> Result<Self> {
        if raw.is_empty() || raw.iter().any(|&w| !(w > T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidSpec("class weights must be finite and > 0".into()));
        }
        let mean = raw.iter().copied().sum::<T>() / T::of_usize(raw.len());
        Ok(Self(raw.into_iter().map(|w| w / mean).collect()))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn is_uniform(&self) -> bool {
        self.0.iter().all(|&w| w == T::one())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reweight {
    #[default]
    None,
    /// `w_j ∝ 1 / n_j`.
    InverseFreq,
    /// Effective-number weights `w_j ∝ (1 - β) / (1 - β^{n_j})`.
    ClassBalanced { beta: f64 },
}

/// Class weights in effect at `epoch`: uniform before `drw_epoch`, the
/// scheme's weights from `drw_epoch` on. Without a `drw_epoch` the scheme is
/// active from the start.
pub fn drw_weights<T: Scalar>(
    class_counts: &[usize],
    epoch: usize,
    drw_epoch: Option<usize>,
    scheme: Reweight,
) -> Result<ClassWeights<T>> {
    let k = class_counts.len();
    let active = drw_epoch.is_none_or(|start| epoch >= start);
    if !active {
        return Ok(ClassWeights::uniform(k));
    }
    let raw: Vec<T> = match scheme {
        Reweight::None => return Ok(ClassWeights::uniform(k)),
        Reweight::InverseFreq => class_counts.iter().map(|&n| T::of_usize(n).recip()).collect(),
        Reweight::ClassBalanced { beta } => {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidSpec(format!(
                    "class-balanced beta must lie in [0, 1), got {beta}"
                )));
            }
            class_counts
                .iter()
                .map(|&n| T::of((1.0 - beta) / (1.0 - beta.powf(n as f64))))
                .collect()
        }
    };
    ClassWeights::normalized(raw)
}

fn log_softmax<T: Scalar>(z: ArrayView1<'_, T>) -> Array1<T> {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = z.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
    z.mapv(|v| v - lse)
}

/// `-log softmax(a)[y]` and its gradient `softmax(a) - e_y`.
///
/// When `y` already wins, the loss is `log1p(Σ_{j≠y} e^{a_j - a_y})` and
/// `1 - p_y` comes from `expm1`, so both stay accurate to full relative
/// precision even when the example is nearly saturated.
fn hard_cross_entropy<T: Scalar>(a: ArrayView1<'_, T>, y: usize) -> (T, Array1<T>) {
    let max = a.iter().copied().fold(T::neg_infinity(), T::max);
    let loss = if a[y] >= max {
        let rest: T = a
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != y)
            .map(|(_, &v)| (v - a[y]).exp())
            .sum();
        rest.ln_1p()
    } else {
        a.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max - a[y]
    };
    let lse = a[y] + loss;
    let mut grad = a.mapv(|v| (v - lse).exp());
    grad[y] = (-loss).exp_m1();
    (loss, grad)
}

fn check_shapes<T>(logits: &Array2<T>, rows: usize, weights: Option<&ClassWeights<T>>) -> Result<()>
where
    T: Scalar,
{
    if logits.nrows() != rows {
        return Err(Error::ShapeMismatch(format!(
            "{} logit rows vs {rows} targets",
            logits.nrows()
        )));
    }
    if rows == 0 {
        return Err(Error::ShapeMismatch("empty batch".into()));
    }
    if let Some(w) = weights {
        if w.as_slice().len() != logits.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "{} class weights for {} classes",
                w.as_slice().len(),
                logits.ncols()
            )));
        }
    }
    Ok(())
}

/// Cross-entropy against soft targets, averaged over rows.
///
/// Row `r` is weighted by `Σ_k ỹ_rk · w_k`, so a mixed label inherits the
/// convex combination of its two classes' weights. Returns the loss and
/// `∂loss/∂logits`.
pub fn soft_cross_entropy<T: Scalar>(
    logits: &Array2<T>,
    soft_labels: &Array2<T>,
    class_weights: Option<&ClassWeights<T>>,
) -> Result<(T, Array2<T>)> {
    check_shapes(logits, soft_labels.nrows(), class_weights)?;
    if soft_labels.ncols() != logits.ncols() {
        return Err(Error::ShapeMismatch("label and logit widths differ".into()));
    }
    for (row, y) in soft_labels.rows().into_iter().enumerate() {
        let sum = y.sum().f64();
        if (sum - 1.0).abs() > LABEL_SUM_TOLERANCE || y.iter().any(|&v| v < T::zero()) {
            return Err(Error::NonNormalizedLabels { row, sum });
        }
    }
    let m = T::of_usize(logits.nrows());
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut total = T::zero();
    for (r, (z, y)) in logits.rows().into_iter().zip(soft_labels.rows()).enumerate() {
        let w_row = match class_weights {
            Some(w) => y.iter().zip(w.as_slice()).map(|(&a, &b)| a * b).sum(),
            None => T::one(),
        };
        let logp = log_softmax(z);
        let ce = -y.iter().zip(logp.iter()).map(|(&a, &b)| a * b).sum::<T>();
        total += w_row * ce;
        for (g, (&lp, &t)) in grad.row_mut(r).iter_mut().zip(logp.iter().zip(y.iter())) {
            *g = w_row * (lp.exp() - t) / m;
        }
    }
    Ok((total / m, grad))
}

/// Per-class LDAM margins `C / n_j^(1/4)`, with `C` chosen so the largest
/// margin (the smallest class) equals `max_margin`.
pub fn ldam_margins<T: Scalar>(class_counts: &[usize], max_margin: T) -> Vec<T> {
    let quarter = T::of(0.25);
    let inv: Vec<T> = class_counts
        .iter()
        .map(|&n| T::of_usize(n).powf(quarter).recip())
        .collect();
    let largest = inv.iter().copied().fold(T::zero(), T::max);
    inv.into_iter().map(|v| v * max_margin / largest).collect()
}

/// LDAM: cross-entropy over `scale · (z - τ_y e_y)` with hard labels.
pub fn ldam_loss<T: Scalar>(
    logits: &Array2<T>,
    hard_labels: &[usize],
    class_counts: &[usize],
    max_margin: T,
    scale: T,
    class_weights: Option<&ClassWeights<T>>,
) -> Result<(T, Array2<T>)> {
    check_shapes(logits, hard_labels.len(), class_weights)?;
    let k = logits.ncols();
    if class_counts.len() != k {
        return Err(Error::ShapeMismatch(format!(
            "{} class counts for {k} classes",
            class_counts.len()
        )));
    }
    if let Some(&y) = hard_labels.iter().find(|&&y| y >= k) {
        return Err(Error::ShapeMismatch(format!("label {y} outside {k} classes")));
    }
    let margins = ldam_margins(class_counts, max_margin);
    let m = T::of_usize(logits.nrows());
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut total = T::zero();
    for (r, (z, &y)) in logits.rows().into_iter().zip(hard_labels).enumerate() {
        let w = class_weights.map_or(T::one(), |cw| cw.as_slice()[y]);
        let mut adjusted = z.to_owned();
        adjusted[y] -= margins[y];
        adjusted *= scale;
        let (ce, g) = hard_cross_entropy(adjusted.view(), y);
        total += w * ce;
        grad.row_mut(r).assign(&g.mapv(|v| w * scale * v / m));
    }
    Ok((total / m, grad))
}

/// Class ids of one-hot rows; any other row is rejected.
pub fn hard_labels_from_soft<T: Scalar>(soft_labels: &Array2<T>) -> Result<Vec<usize>> {
    soft_labels
        .rows()
        .into_iter()
        .enumerate()
        .map(|(r, row)| {
            let mut hot = None;
            for (j, &v) in row.iter().enumerate() {
                if v == T::one() && hot.is_none() {
                    hot = Some(j);
                } else if v != T::zero() {
                    return Err(Error::SoftLabels(r));
                }
            }
            hot.ok_or(Error::SoftLabels(r))
        })
        .collect()
}

pub fn one_hot<T: Scalar>(labels: &[usize], k: usize) -> Array2<T> {
    let mut out = Array2::zeros((labels.len(), k));
    for (r, &y) in labels.iter().enumerate() {
        out[[r, y]] = T::one();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn uniform_logits_uniform_target() {
        let z = Array2::<f64>::zeros((1, 10));
        let y = Array2::from_elem((1, 10), 0.1);
        let (loss, _) = soft_cross_entropy(&z, &y, None).unwrap();
        assert!((loss - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn one_hot_matches_hard_cross_entropy() {
        let z = array![[1.0, 2.0, 0.5], [-1.0, 0.0, 3.0]];
        let (loss, _) = soft_cross_entropy(&z, &one_hot(&[1, 0], 3), None).unwrap();
        let hard = |row: [f64; 3], y: usize| {
            let lse = row.iter().map(|v| v.exp()).sum::<f64>().ln();
            lse - row[y]
        };
        let want = (hard([1.0, 2.0, 0.5], 1) + hard([-1.0, 0.0, 3.0], 0)) / 2.0;
        assert!((loss - want).abs() < 1e-12);
    }

    #[test]
    fn rejects_unnormalized_labels() {
        let z = Array2::<f64>::zeros((1, 2));
        let r = soft_cross_entropy(&z, &array![[0.5, 0.6]], None);
        assert!(matches!(r, Err(Error::NonNormalizedLabels { row: 0, .. })));
    }

    #[test]
    fn ldam_margin_examples() {
        let eq = ldam_margins(&[300, 300, 300], 0.5);
        assert!(eq.iter().all(|&m| (m - 0.5_f64).abs() < 1e-15));
        let m = ldam_margins(&[5000, 50], 0.5_f64);
        assert!((m[1] - 0.5).abs() < 1e-15);
        assert!((m[1] / m[0] - 100f64.powf(0.25)).abs() < 1e-12);
        assert!((m[1] / m[0] - 3.1623).abs() < 1e-4);
    }

    #[test]
    fn ldam_rejects_soft_rows() {
        assert_eq!(
            hard_labels_from_soft(&array![[0.0, 1.0], [1.0, 0.0]]).unwrap(),
            vec![1, 0]
        );
        assert!(matches!(
            hard_labels_from_soft(&array![[0.3, 0.7]]),
            Err(Error::SoftLabels(0))
        ));
    }

    #[test]
    fn drw_examples() {
        let before: ClassWeights<f64> =
            drw_weights(&[100, 100, 10], 3, Some(5), Reweight::InverseFreq).unwrap();
        assert!(before.is_uniform());
        let after: ClassWeights<f64> =
            drw_weights(&[100, 100, 10], 5, Some(5), Reweight::InverseFreq).unwrap();
        let w = after.as_slice();
        assert!((w[0] - 0.25).abs() < 1e-12 && (w[1] - 0.25).abs() < 1e-12 && (w[2] - 2.5).abs() < 1e-12);
        for scheme in [Reweight::InverseFreq, Reweight::ClassBalanced { beta: 0.9999 }] {
            let flat: ClassWeights<f64> = drw_weights(&[40, 40, 40], 9, Some(1), scheme).unwrap();
            assert!(flat.as_slice().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn class_balanced_mean_one() {
        let w: ClassWeights<f64> = drw_weights(
            &[1000, 300, 40, 7],
            0,
            None,
            Reweight::ClassBalanced { beta: 0.999 },
        )
        .unwrap();
        let mean = w.as_slice().iter().sum::<f64>() / 4.0;
        assert!((mean - 1.0).abs() < 1e-12);
        assert!(w.as_slice().windows(2).all(|p| p[0] < p[1]));
    }
}
