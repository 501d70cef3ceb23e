use imbmix::data::{
    long_tailed_counts, split_balanced_eval, step_counts, subsample_imbalanced, synth_gaussian_blobs,
    ImbalanceSpec,
};
use proptest::prelude::*;

// Closed form evaluated at 50 significant digits, then rounded half up.
const LT_5000_10_100: [usize; 10] = [5000, 2997, 1797, 1077, 646, 387, 232, 139, 83, 50];
const LT_1000_10_100: [usize; 10] = [1000, 599, 359, 215, 129, 77, 46, 28, 17, 10];

#[test]
fn long_tailed_matches_high_precision_closed_form() {
    assert_eq!(
        long_tailed_counts(5000, 10, 100.0).unwrap().counts(),
        &LT_5000_10_100
    );
    assert_eq!(
        long_tailed_counts(1000, 10, 100.0).unwrap().counts(),
        &LT_1000_10_100
    );
}

#[test]
fn subsample_from_full_source_matches_histogram() {
    let src = synth_gaussian_blobs::<f32>(10, 2, 5000, 4.0, 17).unwrap();
    let (out, manifest) = subsample_imbalanced(&src, &ImbalanceSpec::long_tailed(100.0, 3)).unwrap();
    assert_eq!(out.class_counts(), LT_5000_10_100.to_vec());
    let json = manifest.to_json().unwrap();
    let back: imbmix::data::SplitManifest = serde_json::from_str(&json).unwrap();
    assert_eq!(back, manifest);
}

#[test]
fn eval_split_histogram_is_uniform() {
    let src = synth_gaussian_blobs::<f64>(7, 3, 60, 2.0, 5).unwrap();
    let split = split_balanced_eval(&src, 13, 99).unwrap();
    assert_eq!(split.eval.class_counts(), vec![13; 7]);
    assert_eq!(split.train.class_counts(), vec![47; 7]);
}

proptest! {
    #[test]
    fn long_tailed_monotone_with_ratio_near_rho(
        k in 2usize..40,
        n_max in 50usize..6000,
        rho_frac in 0.0f64..1.0,
    ) {
        let rho = 1.0 + rho_frac * (n_max as f64 - 1.0);
        let h = long_tailed_counts(n_max, k, rho).unwrap();
        let c = h.counts();
        prop_assert!(c.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(c[0], n_max);
        let tail = c[k - 1];
        let err = (h.imbalance_ratio() - rho).abs() / rho;
        prop_assert!(err <= 2.0 / tail as f64, "ratio {} vs rho {}", h.imbalance_ratio(), rho);
    }

    #[test]
    fn step_has_two_levels(k in 2usize..30, n_max in 10usize..5000, rho in 1.01f64..10.0, mu in 0.05f64..0.95) {
        let minority = (mu * k as f64 + 0.5).floor() as usize;
        prop_assume!(minority >= 1 && minority < k);
        prop_assume!(n_max as f64 / rho >= 1.0);
        let c = step_counts(n_max, k, rho, mu).unwrap().counts().to_vec();
        let small = ((n_max as f64 / rho) + 0.5).floor() as usize;
        prop_assert_eq!(c.iter().filter(|&&v| v == small).count(), if small == n_max { k } else { minority });
        let mut distinct = c.clone();
        distinct.dedup();
        prop_assert!(distinct.len() <= 2);
        if small != n_max {
            prop_assert_eq!(distinct.len(), 2);
        }
    }

    #[test]
    fn subsample_is_deterministic_and_split_partitions(seed in 0u64..1000, n_eval in 1usize..10) {
        let src = synth_gaussian_blobs::<f64>(4, 3, 30, 2.0, seed).unwrap();
        let spec = ImbalanceSpec::step(5.0, 0.5, seed);
        let a = subsample_imbalanced(&src, &spec).unwrap();
        let b = subsample_imbalanced(&src, &spec).unwrap();
        prop_assert_eq!(&a, &b);
        let split = split_balanced_eval(&src, n_eval, seed).unwrap();
        let mut all: Vec<usize> = split.train_indices.iter().chain(&split.eval_indices).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..src.len()).collect::<Vec<_>>());
        prop_assert!(split.train_indices.iter().all(|i| !split.eval_indices.contains(i)));
    }
}
