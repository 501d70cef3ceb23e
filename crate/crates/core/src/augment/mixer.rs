use ndarray::Array2;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::lambda::{lambda_y_mamix, lambda_y_mamix_remix, lambda_y_remix, mamix_etas};
use super::{MixMethod, MixerConfig};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::neighbors::NeighborIndex;
use crate::scalar::Scalar;

/// Virtual examples produced by one mixing step.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedBatch<T> {
    /// `x̃ = λx·x_i + (1-λx)·x_j`, one row per pair.
    pub inputs: Array2<T>,
    /// `ỹ = λy·onehot(y_i) + (1-λy)·onehot(y_j)`.
    pub soft_labels: Array2<T>,
    pub pairs: Vec<(usize, usize)>,
    pub lambda_x: Vec<T>,
    pub lambda_y: Vec<T>,
}

/// Pick a partner `j` for every row `i` of the mini-batch.
///
/// Both ids index the training set. Batch-level methods pair the batch with
/// a shuffled copy of itself; neighbor methods draw uniformly from the
/// index's neighbor list of `i` and fall back to `j = i` when that list is
/// empty (a class with a single member).
pub fn select_pairs<R: Rng + ?Sized>(
    batch: &[usize],
    method: MixMethod,
    index: Option<&NeighborIndex>,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    match method {
        MixMethod::Mixup | MixMethod::Remix | MixMethod::Mamix | MixMethod::MamixRemix => {
            let mut partners = batch.to_vec();
            partners.shuffle(rng);
            Ok(batch.iter().copied().zip(partners).collect())
        }
        MixMethod::SmoteMix | MixMethod::NeighborMix => {
            let want_same_class = method == MixMethod::SmoteMix;
            let index = index
                .filter(|ix| ix.same_class() == want_same_class)
                .ok_or(Error::MissingIndex(method.name()))?;
            Ok(batch
                .iter()
                .map(|&i| {
                    let j = index.neighbors(i).choose(rng).copied().unwrap_or(i);
                    (i, j)
                })
                .collect())
        }
    }
}

/// Mix every pair with one shared `λx`.
pub fn mix_batch<T: Scalar>(
    ds: &LabeledDataset<T>,
    pairs: &[(usize, usize)],
    lambda_x: T,
    config: &MixerConfig,
    class_counts: &[usize],
) -> Result<MixedBatch<T>> {
    mix_batch_per_pair(ds, pairs, &vec![lambda_x; pairs.len()], config, class_counts)
}

/// Mix pair `m` with `lambda_x[m]`.
///
/// `class_counts` are the training-set counts `n_j` read by the Remix and
/// MAMix label rules.
pub fn mix_batch_per_pair<T: Scalar>(
    ds: &LabeledDataset<T>,
    pairs: &[(usize, usize)],
    lambda_x: &[T],
    config: &MixerConfig,
    class_counts: &[usize],
) -> Result<MixedBatch<T>> {
    if lambda_x.len() != pairs.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} lambdas for {} pairs",
            lambda_x.len(),
            pairs.len()
        )));
    }
    if class_counts.len() != ds.num_classes() {
        return Err(Error::ShapeMismatch(format!(
            "{} class counts for {} classes",
            class_counts.len(),
            ds.num_classes()
        )));
    }
    let m = pairs.len();
    let k = ds.num_classes();
    let labels = ds.labels();
    let tau = T::of(config.tau);
    let p = T::of(config.p_majority);
    let omega = T::of(config.omega);

    let mut inputs = Array2::<T>::zeros((m, ds.dim()));
    let mut soft_labels = Array2::<T>::zeros((m, k));
    let mut lambda_y = Vec::with_capacity(m);

    for (row, (&(i, j), &lx)) in pairs.iter().zip(lambda_x).enumerate() {
        if i >= ds.len() || j >= ds.len() {
            return Err(Error::ShapeMismatch(format!(
                "pair ({i}, {j}) outside dataset of {} rows",
                ds.len()
            )));
        }
        let (yi, yj) = (labels[i], labels[j]);
        let (ni, nj) = (class_counts[yi], class_counts[yj]);
        let ly = match config.method {
            MixMethod::Mixup | MixMethod::NeighborMix => lx,
            MixMethod::SmoteMix => T::one(),
            MixMethod::Remix => lambda_y_remix(lx, ni, nj, tau, p),
            MixMethod::Mamix if i == j => lx,
            MixMethod::Mamix => {
                let (ei, ej) = mamix_etas(ni, nj, omega);
                lambda_y_mamix(lx, ei, ej)
            }
            MixMethod::MamixRemix if i == j => lx,
            MixMethod::MamixRemix => lambda_y_mamix_remix(lx, ni, nj, tau, p, omega),
        };

        let one_minus = T::one() - lx;
        let (xi, xj) = (ds.row(i), ds.row(j));
        for (c, out) in inputs.row_mut(row).iter_mut().enumerate() {
            *out = lx * xi[c] + one_minus * xj[c];
        }
        soft_labels[[row, yi]] += ly;
        soft_labels[[row, yj]] += T::one() - ly;
        lambda_y.push(ly);
    }

    Ok(MixedBatch {
        inputs,
        soft_labels,
        pairs: pairs.to_vec(),
        lambda_x: lambda_x.to_vec(),
        lambda_y,
    })
}
