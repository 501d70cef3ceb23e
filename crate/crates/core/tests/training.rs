use imbmix::augment::{MixMethod, MixerConfig};
use imbmix::data::{split_balanced_eval, subsample_imbalanced, synth_gaussian_blobs, ImbalanceSpec};
use imbmix::metrics::balanced_accuracy;
use imbmix::model::{
    drw_weights, export_logits, load_checkpoint, predict, save_checkpoint, train, Architecture, LossKind,
    Reweight, TrainConfig,
};
use proptest::prelude::*;

fn convex_config() -> TrainConfig {
    TrainConfig {
        architecture: Architecture::Linear,
        epochs: 60,
        batch_size: 64,
        lr: 0.01,
        momentum: 0.0,
        weight_decay: 0.0,
        warmup_epochs: 0,
        decay_epochs: vec![],
        ..TrainConfig::default()
    }
}

#[test]
fn convex_loss_trends_down() {
    let src = synth_gaussian_blobs::<f64>(3, 4, 200, 2.0, 8).unwrap();
    let (_, hist) = train(&src, None, &convex_config(), None).unwrap();
    let losses: Vec<f64> = hist.epochs.iter().map(|e| e.loss).collect();
    let means: Vec<f64> = losses.windows(10).map(|w| w.iter().sum::<f64>() / 10.0).collect();
    for (a, b) in means.iter().zip(means.iter().skip(10)) {
        assert!(b < a, "trailing mean rose from {a} to {b}");
    }
}

#[test]
fn predict_agrees_with_balanced_accuracy() {
    let src = synth_gaussian_blobs::<f32>(5, 6, 160, 3.0, 4).unwrap();
    let split = split_balanced_eval(&src, 60, 4).unwrap();
    let cfg = TrainConfig {
        epochs: 15,
        batch_size: 32,
        warmup_epochs: 1,
        decay_epochs: vec![12],
        ..TrainConfig::default()
    };
    let (params, _) = train(&split.train, None, &cfg, Some(&split.eval)).unwrap();
    let pred = predict(&params, split.eval.features()).unwrap();
    let plain = pred
        .iter()
        .zip(split.eval.labels())
        .filter(|(a, b)| a == b)
        .count() as f64
        / pred.len() as f64;
    let z = export_logits(&params, &split.eval).unwrap();
    let bal = balanced_accuracy(&z, split.eval.labels()).unwrap();
    assert!((plain - bal).abs() < 1e-12);
    assert_eq!(z.dim(), (split.eval.len(), 5));
}

#[test]
fn checkpoint_round_trips_exactly() {
    let src = synth_gaussian_blobs::<f64>(3, 4, 50, 3.0, 1).unwrap();
    let cfg = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    let (params, _) = train(&src, None, &cfg, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_checkpoint(&params, &path).unwrap();
    let back = load_checkpoint::<f64>(&path).unwrap();
    assert_eq!(back, params);
}

#[test]
fn every_mixer_trains_with_drw() {
    let src = synth_gaussian_blobs::<f64>(4, 5, 80, 3.0, 2).unwrap();
    let (ds, _) = subsample_imbalanced(&src, &ImbalanceSpec::long_tailed(10.0, 2)).unwrap();
    let cfg = TrainConfig {
        epochs: 6,
        batch_size: 32,
        warmup_epochs: 1,
        decay_epochs: vec![4],
        drw_epoch: Some(3),
        reweight: Reweight::ClassBalanced { beta: 0.9999 },
        ..TrainConfig::default()
    };
    for method in [
        MixMethod::Mixup,
        MixMethod::Remix,
        MixMethod::Mamix,
        MixMethod::SmoteMix,
        MixMethod::NeighborMix,
        MixMethod::MamixRemix,
    ] {
        let (params, hist) = train(&ds, Some(&MixerConfig::new(method)), &cfg, None).unwrap();
        params.validate().unwrap();
        assert_eq!(hist.epochs.len(), 6);
    }
    let ldam = TrainConfig {
        loss: LossKind::ldam(),
        ..cfg
    };
    train(&ds, None, &ldam, None).unwrap();
}

proptest! {
    #[test]
    fn drw_weights_have_unit_mean(counts in prop::collection::vec(1usize..10_000, 2..20), beta in 0.5f64..0.99999) {
        for scheme in [Reweight::InverseFreq, Reweight::ClassBalanced { beta }] {
            let w = drw_weights::<f64>(&counts, 5, Some(5), scheme).unwrap();
            let s = w.as_slice();
            prop_assert!(s.iter().all(|&v| v > 0.0));
            prop_assert!((s.iter().sum::<f64>() / s.len() as f64 - 1.0).abs() < 1e-9);
        }
        let before = drw_weights::<f64>(&counts, 4, Some(5), Reweight::InverseFreq).unwrap();
        prop_assert!(before.is_uniform());
    }
}
