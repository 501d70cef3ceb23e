//! Exact k-nearest-neighbor lists under Euclidean distance.

use std::cmp::Ordering;

use ndarray::{Array2, ArrayView1};

use crate::scalar::Scalar;

/// Per-example neighbor lists, nearest first.
///
/// An example never lists itself. Ties in distance go to the lower row index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborIndex {
    neighbors: Vec<Vec<usize>>,
    k: usize,
    same_class: bool,
}

fn squared_distance<T: Scalar>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(T::zero(), |acc, v| acc + v)
}

fn by_distance_then_index<T: Scalar>(a: &(T, usize), b: &(T, usize)) -> Ordering {
    a.0.partial_cmp(&b.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
}

impl NeighborIndex {
    /// Brute-force index over every row of `features`.
    ///
    /// With `labels` given, candidates are restricted to rows of the same
    /// class; lists are then shorter than `k` for classes with `k` or fewer
    /// members.
    pub fn build<T: Scalar>(features: &Array2<T>, k: usize, labels: Option<&[usize]>) -> Self {
        let n = features.nrows();
        let neighbors = (0..n)
            .map(|i| {
                let xi = features.row(i);
                let mut cands: Vec<(T, usize)> = (0..n)
                    .filter(|&j| j != i && labels.is_none_or(|y| y[j] == y[i]))
                    .map(|j| (squared_distance(xi, features.row(j)), j))
                    .collect();
                let keep = k.min(cands.len());
                if keep > 0 && keep < cands.len() {
                    cands.select_nth_unstable_by(keep - 1, by_distance_then_index);
                    cands.truncate(keep);
                }
                cands.sort_by(by_distance_then_index);
                cands.truncate(keep);
                cands.into_iter().map(|(_, j)| j).collect()
            })
            .collect();
        Self {
            neighbors,
            k,
            same_class: labels.is_some(),
        }
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn same_class(&self) -> bool {
        self.same_class
    }
}
