//! Labeled datasets and controlled class-imbalance construction.
//!
//! A balanced source (synthetic Gaussian blobs or a CSV file) is split into a
//! balanced evaluation set and a training pool, and the training pool is then
//! subsampled to a long-tailed or step class histogram.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::{index, SliceRandom};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Dense feature matrix with integer class labels in `0..num_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    features: Array2<T>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(features: Array2<T>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if features.nrows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if labels.len() < num_classes {
            return Err(Error::InvalidSpec(format!(
                "{} examples cannot cover {num_classes} classes",
                labels.len()
            )));
        }
        if let Some((row, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(Error::InvalidSpec(format!(
                "label {y} at row {row} outside 0..{num_classes}"
            )));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
        })
    }

    pub fn features(&self) -> &Array2<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, T> {
        self.features.row(i)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Row indices grouped by class, each list in ascending order.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.num_classes];
        for (i, &y) in self.labels.iter().enumerate() {
            groups[y].push(i);
        }
        groups
    }

    /// New dataset made of the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let features = self.features.select(Axis(0), rows);
        let labels = rows.iter().map(|&i| self.labels[i]).collect();
        Self::new(features, labels, self.num_classes)
    }

    pub fn histogram(&self) -> Result<ClassHistogram> {
        ClassHistogram::new(self.class_counts())
    }
}

/// Per-class sample counts `n_j`; every class has at least one example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassHistogram {
    counts: Vec<usize>,
}

impl ClassHistogram {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidSpec("histogram needs at least 2 classes".into()));
        }
        if let Some(j) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyClass(j));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `max(n_j) / min(n_j)`.
    pub fn imbalance_ratio(&self) -> f64 {
        let max = *self.counts.iter().max().expect("non-empty");
        let min = *self.counts.iter().min().expect("non-empty");
        max as f64 / min as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImbalanceKind {
    LongTailed,
    Step,
}

fn default_mu() -> f64 {
    0.5
}

/// How to carve an imbalanced training set out of a balanced pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImbalanceSpec {
    pub kind: ImbalanceKind,
    pub rho: f64,
    /// Fraction of minority classes; only read for step imbalance.
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub seed: u64,
    /// Head-class size; defaults to the smallest class of the source pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// When set, the decay order over class ids is a seeded permutation
    /// instead of `0..K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_order_seed: Option<u64>,
}

impl ImbalanceSpec {
    pub fn long_tailed(rho: f64, seed: u64) -> Self {
        Self {
            kind: ImbalanceKind::LongTailed,
            rho,
            mu: default_mu(),
            seed,
            n_max: None,
            class_order_seed: None,
        }
    }

    pub fn step(rho: f64, mu: f64, seed: u64) -> Self {
        Self {
            kind: ImbalanceKind::Step,
            mu,
            ..Self::long_tailed(rho, seed)
        }
    }

    /// Target histogram for `num_classes` classes with head size `n_max`,
    /// in class-id order (after the optional permutation).
    pub fn histogram(&self, n_max: usize, num_classes: usize) -> Result<ClassHistogram> {
        let base = match self.kind {
            ImbalanceKind::LongTailed => long_tailed_counts(n_max, num_classes, self.rho)?,
            ImbalanceKind::Step => step_counts(n_max, num_classes, self.rho, self.mu)?,
        };
        match self.class_order_seed {
            None => Ok(base),
            Some(seed) => {
                let mut order: Vec<usize> = (0..num_classes).collect();
                order.shuffle(&mut rng::stream(seed, "class-order"));
                let mut counts = vec![0; num_classes];
                for (rank, &class) in order.iter().enumerate() {
                    counts[class] = base.counts[rank];
                }
                ClassHistogram::new(counts)
            }
        }
    }
}

/// Round half up.
fn round_count(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

fn check_rho(n_max: usize, k: usize, rho: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidSpec(format!("need K >= 2, got {k}")));
    }
    if !(rho >= 1.0) || !rho.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "imbalance ratio must be >= 1, got {rho}"
        )));
    }
    if (n_max as f64) / rho < 1.0 {
        return Err(Error::InvalidSpec(format!(
            "n_max / rho = {n_max} / {rho} leaves the tail class empty"
        )));
    }
    Ok(())
}

/// Exponentially decaying class sizes `round(n_max · rho^(-k/(K-1)))`.
pub fn long_tailed_counts(n_max: usize, k: usize, rho: f64) -> Result<ClassHistogram> {
    check_rho(n_max, k, rho)?;
    let counts = (0..k)
        .map(|j| {
            let exponent = -(j as f64) / (k - 1) as f64;
            round_count(n_max as f64 * rho.powf(exponent)).max(1)
        })
        .collect();
    ClassHistogram::new(counts)
}

/// Two-level histogram: the last `round(mu·K)` classes shrink to
/// `round(n_max / rho)`.
pub fn step_counts(n_max: usize, k: usize, rho: f64, mu: f64) -> Result<ClassHistogram> {
    check_rho(n_max, k, rho)?;
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::InvalidSpec(format!("mu must lie in (0, 1), got {mu}")));
    }
    let minority = round_count(mu * k as f64);
    if minority == 0 || minority >= k {
        return Err(Error::InvalidSpec(format!(
            "round(mu*K) = {minority} must be between 1 and K-1 = {}",
            k - 1
        )));
    }
    let small = round_count(n_max as f64 / rho).max(1);
    let counts = (0..k)
        .map(|j| if j < k - minority { n_max } else { small })
        .collect();
    ClassHistogram::new(counts)
}

/// Row indices retained from a source dataset, grouped by class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub per_class: Vec<Vec<usize>>,
}

impl SplitManifest {
    /// All indices in ascending order.
    pub fn flat(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.per_class.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Draw the spec's histogram from `src`, uniformly without replacement within
/// each class. Output rows keep their source order.
pub fn subsample_imbalanced<T: Scalar>(
    src: &LabeledDataset<T>,
    spec: &ImbalanceSpec,
) -> Result<(LabeledDataset<T>, SplitManifest)> {
    let groups = src.indices_by_class();
    let n_max = match spec.n_max {
        Some(n) => n,
        None => groups.iter().map(Vec::len).min().unwrap_or(0),
    };
    let target = spec.histogram(n_max, src.num_classes())?;
    let mut rng = rng::stream(spec.seed, "subsample");
    let mut per_class = Vec::with_capacity(groups.len());
    for (class, (members, &needed)) in groups.iter().zip(target.counts()).enumerate() {
        if members.len() < needed {
            return Err(Error::InsufficientSamples {
                class,
                needed,
                available: members.len(),
            });
        }
        let mut picked: Vec<usize> = index::sample(&mut rng, members.len(), needed)
            .into_iter()
            .map(|p| members[p])
            .collect();
        picked.sort_unstable();
        per_class.push(picked);
    }
    let manifest = SplitManifest { per_class };
    let subset = src.select(&manifest.flat())?;
    Ok((subset, manifest))
}

/// `K` unit-covariance Gaussian clusters whose means are pairwise at least
/// `sep` apart. With `K <= d` the means are `sep/√2 · e_k` (a regular
/// simplex); otherwise random directions rescaled so the closest pair sits
/// exactly at `sep`.
pub fn synth_gaussian_blobs<T: Scalar>(
    k: usize,
    d: usize,
    n_per_class: usize,
    sep: f64,
    seed: u64,
) -> Result<LabeledDataset<T>> {
    if k < 2 || d < 2 {
        return Err(Error::InvalidSpec(format!(
            "need K >= 2 and d >= 2, got K={k}, d={d}"
        )));
    }
    if !(sep > 0.0) {
        return Err(Error::InvalidSpec(format!("separation must be > 0, got {sep}")));
    }
    if n_per_class == 0 {
        return Err(Error::InvalidSpec("n_per_class must be >= 1".into()));
    }
    let mut rng = rng::stream(seed, "blobs");
    let means = if k <= d {
        let mut m = Array2::<f64>::zeros((k, d));
        for j in 0..k {
            m[[j, j]] = sep / std::f64::consts::SQRT_2;
        }
        m
    } else {
        let mut m = Array2::<f64>::from_shape_fn((k, d), |_| StandardNormal.sample(&mut rng));
        let mut closest = f64::INFINITY;
        for a in 0..k {
            for b in a + 1..k {
                let dist = (&m.row(a) - &m.row(b)).mapv(|v| v * v).sum().sqrt();
                closest = closest.min(dist);
            }
        }
        m *= sep / closest;
        m
    };
    let n = k * n_per_class;
    let mut features = Array2::<T>::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for class in 0..k {
        for r in 0..n_per_class {
            let row = class * n_per_class + r;
            for c in 0..d {
                let noise: f64 = StandardNormal.sample(&mut rng);
                features[[row, c]] = T::of(means[[class, c]] + noise);
            }
            labels.push(class);
        }
    }
    LabeledDataset::new(features, labels, k)
}

/// Parse `d` float columns followed by an integer label per line.
pub fn parse_csv<T: Scalar>(text: &str, header: bool) -> Result<LabeledDataset<T>> {
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut labels = Vec::new();
    let mut dim = None;
    for (line_no, line) in text.lines().enumerate().skip(usize::from(header)) {
        let row = line_no + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(Error::Parse {
                row,
                message: "expected at least one feature and a label".into(),
            });
        }
        let (feats, label) = fields.split_at(fields.len() - 1);
        match dim {
            None => dim = Some(feats.len()),
            Some(d) if d != feats.len() => {
                return Err(Error::Parse {
                    row,
                    message: format!("expected {d} features, found {}", feats.len()),
                })
            }
            Some(_) => {}
        }
        let values = feats
            .iter()
            .map(|f| {
                f.parse::<f64>().map(T::of).map_err(|e| Error::Parse {
                    row,
                    message: format!("bad feature {f:?}: {e}"),
                })
            })
            .collect::<Result<Vec<T>>>()?;
        let y = label[0].parse::<usize>().map_err(|e| Error::Parse {
            row,
            message: format!("bad label {:?}: {e}", label[0]),
        })?;
        rows.push(values);
        labels.push(y);
    }
    let d = dim.ok_or(Error::Parse {
        row: 0,
        message: "no data rows".into(),
    })?;
    let k = labels.iter().max().map_or(0, |m| m + 1).max(2);
    let flat: Vec<T> = rows.into_iter().flatten().collect();
    let features =
        Array2::from_shape_vec((labels.len(), d), flat).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    LabeledDataset::new(features, labels, k)
}

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, header: bool) -> Result<LabeledDataset<T>> {
    parse_csv(&fs::read_to_string(path)?, header)
}

pub fn to_csv<T: Scalar>(ds: &LabeledDataset<T>) -> String {
    let mut out = String::new();
    for (row, &y) in ds.features.rows().into_iter().zip(&ds.labels) {
        for v in row {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{y}");
    }
    out
}

pub fn write_csv<T: Scalar>(ds: &LabeledDataset<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_csv(ds))?;
    Ok(())
}

/// Disjoint train/eval partition of a source dataset.
#[derive(Debug, Clone)]
pub struct BalancedSplit<T> {
    pub train: LabeledDataset<T>,
    pub eval: LabeledDataset<T>,
    pub train_indices: Vec<usize>,
    pub eval_indices: Vec<usize>,
}

/// Hold out exactly `n_eval_per_class` random rows of every class.
pub fn split_balanced_eval<T: Scalar>(
    ds: &LabeledDataset<T>,
    n_eval_per_class: usize,
    seed: u64,
) -> Result<BalancedSplit<T>> {
    let mut rng = rng::stream(seed, "eval-split");
    let mut eval_indices = Vec::new();
    for (class, members) in ds.indices_by_class().iter().enumerate() {
        if members.len() < n_eval_per_class {
            return Err(Error::InsufficientSamples {
                class,
                needed: n_eval_per_class,
                available: members.len(),
            });
        }
        eval_indices.extend(
            index::sample(&mut rng, members.len(), n_eval_per_class)
                .into_iter()
                .map(|p| members[p]),
        );
    }
    eval_indices.sort_unstable();
    let mut held = vec![false; ds.len()];
    for &i in &eval_indices {
        held[i] = true;
    }
    let train_indices: Vec<usize> = (0..ds.len()).filter(|&i| !held[i]).collect();
    Ok(BalancedSplit {
        train: ds.select(&train_indices)?,
        eval: ds.select(&eval_indices)?,
        train_indices,
        eval_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(k: usize, per: usize) -> LabeledDataset<f64> {
        synth_gaussian_blobs(k, 4, per, 3.0, 11).unwrap()
    }

    #[test]
    fn long_tailed_balanced_when_rho_is_one() {
        let h = long_tailed_counts(5000, 10, 1.0).unwrap();
        assert!(h.counts().iter().all(|&c| c == 5000));
    }

    #[test]
    fn long_tailed_head_and_tail() {
        let h = long_tailed_counts(5000, 10, 100.0).unwrap();
        assert_eq!(h.counts()[0], 5000);
        assert_eq!(h.counts()[9], 50);
    }

    #[test]
    fn long_tailed_rejects_bad_rho() {
        assert!(matches!(
            long_tailed_counts(100, 10, 0.5),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            long_tailed_counts(50, 10, 100.0),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn step_examples() {
        let h = step_counts(5000, 10, 10.0, 0.5).unwrap();
        assert_eq!(
            h.counts(),
            &[5000, 5000, 5000, 5000, 5000, 500, 500, 500, 500, 500]
        );
        let flat = step_counts(5000, 10, 1.0, 0.5).unwrap();
        assert!(flat.counts().iter().all(|&c| c == 5000));
        assert_eq!(step_counts(900, 3, 3.0, 0.34).unwrap().counts(), &[900, 900, 300]);
    }

    #[test]
    fn step_rejects_degenerate_minority() {
        assert!(step_counts(100, 10, 2.0, 0.01).is_err());
        assert!(step_counts(100, 10, 2.0, 0.97).is_err());
        assert!(step_counts(100, 10, 2.0, 1.0).is_err());
    }

    #[test]
    fn permuted_class_order_keeps_multiset() {
        let mut spec = ImbalanceSpec::long_tailed(10.0, 0);
        spec.class_order_seed = Some(3);
        let mut permuted = spec.histogram(100, 6).unwrap().counts().to_vec();
        let mut plain = long_tailed_counts(100, 6, 10.0).unwrap().counts().to_vec();
        permuted.sort_unstable();
        plain.sort_unstable();
        assert_eq!(permuted, plain);
    }

    #[test]
    fn subsample_rho_one_keeps_counts() {
        let src = balanced(3, 40);
        let (out, _) = subsample_imbalanced(&src, &ImbalanceSpec::long_tailed(1.0, 5)).unwrap();
        assert_eq!(out.class_counts(), vec![40, 40, 40]);
    }

    #[test]
    fn subsample_matches_histogram_and_is_deterministic() {
        let src = balanced(10, 500);
        let spec = ImbalanceSpec::long_tailed(100.0, 9);
        let (a, ma) = subsample_imbalanced(&src, &spec).unwrap();
        let (b, mb) = subsample_imbalanced(&src, &spec).unwrap();
        assert_eq!(
            a.class_counts(),
            long_tailed_counts(500, 10, 100.0).unwrap().counts()
        );
        assert_eq!(ma, mb);
        assert_eq!(a, b);
        for (class, idx) in ma.per_class.iter().enumerate() {
            assert!(idx.iter().all(|&i| src.labels()[i] == class));
        }
    }

    #[test]
    fn subsample_names_deficient_class() {
        let src = balanced(3, 10);
        let mut spec = ImbalanceSpec::long_tailed(2.0, 1);
        spec.n_max = Some(20);
        match subsample_imbalanced(&src, &spec) {
            Err(Error::InsufficientSamples {
                class: 0,
                needed: 20,
                available: 10,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blobs_one_point_per_class() {
        let ds = synth_gaussian_blobs::<f64>(5, 2, 1, 1.0, 0).unwrap();
        assert_eq!(ds.len(), 5);
        assert_eq!(ds.class_counts(), vec![1; 5]);
    }

    #[test]
    fn blobs_deterministic() {
        let a = synth_gaussian_blobs::<f64>(4, 3, 20, 2.0, 42).unwrap();
        let b = synth_gaussian_blobs::<f64>(4, 3, 20, 2.0, 42).unwrap();
        assert_eq!(a, b);
        let c = synth_gaussian_blobs::<f64>(4, 3, 20, 2.0, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn blobs_means_respect_separation_when_k_exceeds_d() {
        let ds = synth_gaussian_blobs::<f64>(7, 2, 4000, 5.0, 1).unwrap();
        let groups = ds.indices_by_class();
        let means: Vec<Vec<f64>> = groups
            .iter()
            .map(|g| {
                (0..2)
                    .map(|c| g.iter().map(|&i| ds.features()[[i, c]]).sum::<f64>() / g.len() as f64)
                    .collect()
            })
            .collect();
        for a in 0..7 {
            for b in a + 1..7 {
                let d = ((means[a][0] - means[b][0]).powi(2) + (means[a][1] - means[b][1]).powi(2)).sqrt();
                // sample means wobble by ~1/sqrt(4000) per axis
                assert!(d > 5.0 - 0.15, "classes {a},{b} at {d}");
            }
        }
    }

    #[test]
    fn csv_round_trip_exact() {
        let ds = synth_gaussian_blobs::<f64>(3, 4, 7, 2.5, 8).unwrap();
        let back: LabeledDataset<f64> = parse_csv(&to_csv(&ds), false).unwrap();
        assert_eq!(ds, back);
        let ds32 = synth_gaussian_blobs::<f32>(3, 4, 7, 2.5, 8).unwrap();
        let back32: LabeledDataset<f32> = parse_csv(&to_csv(&ds32), false).unwrap();
        assert_eq!(ds32, back32);
    }

    #[test]
    fn csv_header_and_errors() {
        let text = "a,b,label\n1.0,2.0,0\n3.0,4.0,1\n";
        let ds: LabeledDataset<f64> = parse_csv(text, true).unwrap();
        assert_eq!(ds.len(), 2);
        match parse_csv::<f64>("1.0,2.0,0\n1.0,x,1\n", false) {
            Err(Error::Parse { row: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_csv::<f64>("1.0,2.0,0\n1.0,1\n", false) {
            Err(Error::Parse { row: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn split_sizes_and_partition() {
        let ds = balanced(10, 100);
        let s = split_balanced_eval(&ds, 20, 4).unwrap();
        assert_eq!(s.eval.len(), 200);
        assert_eq!(s.train.len(), 800);
        assert_eq!(s.eval.class_counts(), vec![20; 10]);
        let mut all: Vec<usize> = s.train_indices.iter().chain(&s.eval_indices).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn split_insufficient() {
        let ds = balanced(3, 5);
        assert!(matches!(
            split_balanced_eval(&ds, 6, 0),
            Err(Error::InsufficientSamples { class: 0, .. })
        ));
    }

    #[test]
    fn dataset_rejects_out_of_range_label() {
        let f = Array2::<f64>::zeros((3, 2));
        assert!(LabeledDataset::new(f, vec![0, 1, 2], 2).is_err());
    }
}
