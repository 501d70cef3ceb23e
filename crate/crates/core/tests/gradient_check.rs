//! Analytic gradients against central finite differences.

use imbmix::model::{
    drw_weights, ldam_loss, param_gradient, soft_cross_entropy, Architecture, Head, ModelParams, Reweight,
};
use imbmix::rng;
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

const H: f64 = 1e-5;

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 =
        a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

fn fd_logits(z: &Array2<f64>, f: impl Fn(&Array2<f64>) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(z.len());
    for idx in 0..z.len() {
        let (r, c) = (idx / z.ncols(), idx % z.ncols());
        let mut plus = z.clone();
        let mut minus = z.clone();
        plus[[r, c]] += H;
        minus[[r, c]] -= H;
        out.push((f(&plus) - f(&minus)) / (2.0 * H));
    }
    out
}

fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-scale..scale))
}

fn random_soft_labels(rows: usize, k: usize, rng: &mut impl Rng) -> Array2<f64> {
    let mut y = Array2::zeros((rows, k));
    for r in 0..rows {
        let (a, b) = (rng.random_range(0..k), rng.random_range(0..k));
        let l: f64 = rng.random();
        y[[r, a]] += l;
        y[[r, b]] += 1.0 - l;
    }
    y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn soft_ce_logit_gradient(seed in any::<u64>(), weighted in any::<bool>()) {
        let mut r = rng::stream(seed, "grad");
        let z = random_matrix(4, 3, 3.0, &mut r);
        let y = random_soft_labels(4, 3, &mut r);
        let w = weighted.then(|| drw_weights::<f64>(&[50, 7, 300], 1, Some(0), Reweight::InverseFreq).unwrap());
        let (_, g) = soft_cross_entropy(&z, &y, w.as_ref()).unwrap();
        let fd = fd_logits(&z, |zz| soft_cross_entropy(zz, &y, w.as_ref()).unwrap().0);
        let e = rel_err(g.as_slice().unwrap(), &fd);
        prop_assert!(e < 1e-5, "relative error {e}");
    }

    #[test]
    fn ldam_logit_gradient(seed in any::<u64>(), weighted in any::<bool>()) {
        let mut r = rng::stream(seed, "grad");
        let z = random_matrix(4, 3, 0.3, &mut r);
        let labels: Vec<usize> = (0..4).map(|_| r.random_range(0..3)).collect();
        let counts = [900, 90, 9];
        let w = weighted.then(|| drw_weights::<f64>(&counts, 0, None, Reweight::ClassBalanced { beta: 0.999 }).unwrap());
        let (_, g) = ldam_loss(&z, &labels, &counts, 0.5, 30.0, w.as_ref()).unwrap();
        let fd = fd_logits(&z, |zz| ldam_loss(zz, &labels, &counts, 0.5, 30.0, w.as_ref()).unwrap().0);
        let e = rel_err(g.as_slice().unwrap(), &fd);
        prop_assert!(e < 1e-5, "relative error {e}");
    }

    #[test]
    fn parameter_gradient_through_both_architectures(
        seed in any::<u64>(),
        mlp in any::<bool>(),
        use_ldam in any::<bool>(),
        cosine in any::<bool>(),
    ) {
        let mut r = rng::stream(seed, "grad");
        let arch = if mlp { Architecture::Mlp { hidden: 4 } } else { Architecture::Linear };
        let head = if cosine { Head::Cosine } else { Head::Affine };
        let params = ModelParams::<f64>::init(arch, 3, 3, &mut r).with_head(head);
        let x = random_matrix(5, 3, 2.0, &mut r);
        let labels: Vec<usize> = (0..5).map(|_| r.random_range(0..3)).collect();
        let soft = random_soft_labels(5, 3, &mut r);
        let counts = [40, 12, 3];
        let loss = |z: &Array2<f64>| {
            if use_ldam {
                ldam_loss(z, &labels, &counts, 0.5, 5.0, None)
            } else {
                soft_cross_entropy(z, &soft, None)
            }
        };
        let (_, analytic) = param_gradient(&params, &x, loss).unwrap();
        let value_at = |p: &ModelParams<f64>| loss(&imbmix::model::forward_logits(p, &x).unwrap()).unwrap().0;
        let numeric: Vec<f64> = (0..params.num_params())
            .map(|i| {
                let mut plus = params.clone();
                *plus.param_mut(i) += H;
                let mut minus = params.clone();
                *minus.param_mut(i) -= H;
                (value_at(&plus) - value_at(&minus)) / (2.0 * H)
            })
            .collect();
        let e = rel_err(&analytic, &numeric);
        prop_assert!(e < 1e-5, "relative error {e}");
    }

    #[test]
    fn one_hot_soft_ce_equals_hard_ce(seed in any::<u64>()) {
        let mut r = rng::stream(seed, "ce");
        let z = random_matrix(6, 4, 5.0, &mut r);
        let labels: Vec<usize> = (0..6).map(|_| r.random_range(0..4)).collect();
        let (soft, _) = soft_cross_entropy(&z, &imbmix::model::one_hot(&labels, 4), None).unwrap();
        let hard: f64 = z
            .rows()
            .into_iter()
            .zip(&labels)
            .map(|(row, &y)| row.iter().map(|v| v.exp()).sum::<f64>().ln() - row[y])
            .sum::<f64>()
            / 6.0;
        prop_assert!((soft - hard).abs() < 1e-12);
    }

    #[test]
    fn forward_matches_matmul_oracle(seed in any::<u64>()) {
        let mut r = rng::stream(seed, "fwd");
        let params = ModelParams::<f64>::init(Architecture::Linear, 3, 3, &mut r);
        let x = random_matrix(5, 3, 2.0, &mut r);
        let z = imbmix::model::forward_logits(&params, &x).unwrap();
        let (w, b) = (&params.layers[0].weight, &params.layers[0].bias);
        for i in 0..5 {
            for j in 0..3 {
                let mut acc = b[j];
                for k in 0..3 {
                    acc += x[[i, k]] * w[[k, j]];
                }
                prop_assert!((z[[i, j]] - acc).abs() < 1e-12);
            }
        }
    }
}

/// Nearly saturated rows keep full relative precision in loss and gradient.
#[test]
fn saturated_ldam_row_is_accurate() {
    let z = ndarray::array![[0.9, -0.2, 0.1]];
    let counts = [1000, 100, 10];
    let (loss, g) = ldam_loss(&z, &[0], &counts, 0.5, 30.0, None).unwrap();
    let margin = imbmix::model::ldam_margins::<f64>(&counts, 0.5)[0];
    let a0 = 30.0 * (0.9 - margin);
    let (e1, e2) = ((30.0 * -0.2 - a0).exp(), (30.0 * 0.1 - a0).exp());
    let want = (e1 + e2).ln_1p();
    assert!(((loss - want) / want).abs() < 1e-14, "{loss} vs {want}");
    // the true-class entry is -(1 - p_y) = -(e1 + e2)/(1 + e1 + e2), scaled by 30
    let gy = -30.0 * (e1 + e2) / (1.0 + e1 + e2);
    assert!(((g[[0, 0]] - gy) / gy).abs() < 1e-13, "{} vs {gy}", g[[0, 0]]);
    let fd = {
        let h = 1e-5;
        let f = |d: f64| {
            ldam_loss(
                &ndarray::array![[0.9 + d, -0.2, 0.1]],
                &[0],
                &counts,
                0.5,
                30.0,
                None,
            )
            .unwrap()
            .0
        };
        (f(h) - f(-h)) / (2.0 * h)
    };
    assert!(((fd - gy) / gy).abs() < 1e-5);
}
