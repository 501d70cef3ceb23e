//! Classic SMOTE: oversample every class up to the largest one with points
//! interpolated between a member and one of its same-class nearest neighbors.

use ndarray::{concatenate, Array2, Axis};
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::neighbors::NeighborIndex;
use crate::scalar::Scalar;

/// Parents of one synthetic row: `x = x_parent + u·(x_neighbor - x_parent)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOrigin {
    /// Output row holding the synthetic point.
    pub row: usize,
    pub parent: usize,
    pub neighbor: usize,
    pub u: f64,
}

pub fn smote_oversample<T: Scalar, R: Rng + ?Sized>(
    train: &LabeledDataset<T>,
    k: usize,
    rng: &mut R,
) -> Result<LabeledDataset<T>> {
    smote_oversample_traced(train, k, rng).map(|(ds, _)| ds)
}

/// SMOTE that also reports where every synthetic row came from.
///
/// Original rows are kept first and in order; synthetic rows follow, grouped
/// by class. A class with a single member cannot interpolate, so its point
/// is duplicated (`neighbor == parent`, `u == 0`).
pub fn smote_oversample_traced<T: Scalar, R: Rng + ?Sized>(
    train: &LabeledDataset<T>,
    k: usize,
    rng: &mut R,
) -> Result<(LabeledDataset<T>, Vec<SyntheticOrigin>)> {
    if k == 0 {
        return Err(Error::InvalidSpec("SMOTE needs k >= 1".into()));
    }
    let groups = train.indices_by_class();
    let target = groups.iter().map(Vec::len).max().unwrap_or(0);
    let mut origins = Vec::new();
    let mut rows: Vec<T> = Vec::new();
    let mut labels = train.labels().to_vec();
    let mut next_row = train.len();

    for (class, members) in groups.iter().enumerate() {
        let deficit = target - members.len();
        if deficit == 0 {
            continue;
        }
        if members.is_empty() {
            return Err(Error::EmptyClass(class));
        }
        if members.len() == 1 {
            log::warn!("class {class} has a single example; SMOTE duplicates it");
        }
        let local = train.features().select(Axis(0), members);
        let index = NeighborIndex::build(&local, k, None);
        for _ in 0..deficit {
            let a = rng.random_range(0..members.len());
            let (b, u) = match index.neighbors(a).choose(rng) {
                Some(&b) => (b, rng.random::<f64>()),
                None => (a, 0.0),
            };
            let (xa, xb) = (local.row(a), local.row(b));
            let ut = T::of(u);
            rows.extend(xa.iter().zip(xb.iter()).map(|(&p, &q)| p + ut * (q - p)));
            labels.push(class);
            origins.push(SyntheticOrigin {
                row: next_row,
                parent: members[a],
                neighbor: members[b],
                u,
            });
            next_row += 1;
        }
    }

    let synthetic = Array2::from_shape_vec((origins.len(), train.dim()), rows)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let features = concatenate(Axis(0), &[train.features().view(), synthetic.view()])
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    Ok((
        LabeledDataset::new(features, labels, train.num_classes())?,
        origins,
    ))
}
