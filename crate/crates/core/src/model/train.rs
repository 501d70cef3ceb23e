//! Mini-batch SGD following the Mixup framework loop: pick pairs, draw
//! `λx`, build the virtual batch, take a weighted loss step.

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::{drw_weights, hard_labels_from_soft, ldam_loss, one_hot, soft_cross_entropy, Reweight};
use super::network::{Architecture, Dense, Head, ModelParams};
use crate::augment::{draw_lambdas, mix_batch_per_pair, select_pairs, MixerConfig};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::metrics::balanced_accuracy;
use crate::neighbors::NeighborIndex;
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    SoftCe,
    Ldam {
        max_margin: f64,
        scale: f64,
    },
}

impl LossKind {
    pub fn ldam() -> Self {
        Self::Ldam {
            max_margin: 0.5,
            scale: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub architecture: Architecture,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub warmup_epochs: usize,
    pub decay_epochs: Vec<usize>,
    pub decay_factor: f64,
    pub drw_epoch: Option<usize>,
    pub loss: LossKind,
    pub reweight: Reweight,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::default(),
            epochs: 100,
            batch_size: 128,
            lr: 0.1,
            momentum: 0.9,
            weight_decay: 2e-4,
            warmup_epochs: 5,
            decay_epochs: vec![80, 90],
            decay_factor: 0.1,
            drw_epoch: None,
            loss: LossKind::SoftCe,
            reweight: Reweight::None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be >= 1".into());
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return bad(format!("learning rate must be finite and >= 0, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.momentum) || !(self.weight_decay >= 0.0) {
            return bad("momentum must lie in [0, 1) and weight decay be >= 0".into());
        }
        if !(self.decay_factor > 0.0 && self.decay_factor < 1.0) {
            return bad(format!(
                "decay_factor must lie in (0, 1), got {}",
                self.decay_factor
            ));
        }
        if let Some(d) = self.drw_epoch {
            if d >= self.epochs {
                return bad(format!("drw_epoch {d} must be < epochs {}", self.epochs));
            }
        }
        if let Architecture::Mlp { hidden: 0 } = self.architecture {
            return bad("hidden width must be >= 1".into());
        }
        if let LossKind::Ldam { max_margin, scale } = self.loss {
            if !(max_margin > 0.0 && scale > 0.0) {
                return bad("LDAM max_margin and scale must be > 0".into());
            }
        }
        Ok(())
    }
}

/// Learning rate for `epoch`: a linear ramp from `lr / warmup` up to `lr`
/// over the warm-up epochs, times `decay_factor` for every decay epoch
/// already reached.
pub fn lr_at(epoch: usize, config: &TrainConfig) -> f64 {
    let mut lr = config.lr;
    if config.warmup_epochs > 0 && epoch < config.warmup_epochs {
        lr *= (epoch + 1) as f64 / config.warmup_epochs as f64;
    }
    for &d in &config.decay_epochs {
        if epoch >= d {
            lr *= config.decay_factor;
        }
    }
    lr
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub lr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_balanced_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochStats>,
}

struct Momentum<T> {
    velocity: Vec<Dense<T>>,
}

impl<T: Scalar> Momentum<T> {
    fn new(params: &ModelParams<T>) -> Self {
        let velocity = params
            .layers
            .iter()
            .map(|l| Dense {
                weight: Array2::zeros(l.weight.raw_dim()),
                bias: ndarray::Array1::zeros(l.bias.len()),
            })
            .collect();
        Self { velocity }
    }

    /// `g += wd·θ; v = μ·v + g; θ -= lr·v`.
    fn step(&mut self, params: &mut ModelParams<T>, grads: &[Dense<T>], lr: T, mu: T, wd: T) {
        for ((layer, grad), vel) in params.layers.iter_mut().zip(grads).zip(&mut self.velocity) {
            ndarray::Zip::from(&mut layer.weight)
                .and(&grad.weight)
                .and(&mut vel.weight)
                .for_each(|p, &g, v| {
                    *v = mu * *v + g + wd * *p;
                    *p -= lr * *v;
                });
            ndarray::Zip::from(&mut layer.bias)
                .and(&grad.bias)
                .and(&mut vel.bias)
                .for_each(|p, &g, v| {
                    *v = mu * *v + g + wd * *p;
                    *p -= lr * *v;
                });
        }
    }
}

/// Train from a fresh seeded initialization.
///
/// Without a mixer this is plain ERM on one-hot labels. Class counts for the
/// DRW weights and the Remix/MAMix label rules come from `train_ds` once, up
/// front. Randomness is split into independent streams (init, shuffle,
/// pairs, lambda) so batch order does not depend on the mixer. LDAM runs
/// get a cosine output head, since its fixed scale assumes logits in
/// `[-1, 1]`.
pub fn train<T: Scalar>(
    train_ds: &LabeledDataset<T>,
    mixer: Option<&MixerConfig>,
    config: &TrainConfig,
    eval: Option<&LabeledDataset<T>>,
) -> Result<(ModelParams<T>, History)> {
    config.validate()?;
    let mut init_rng = rng::stream(config.seed, "init");
    let params = ModelParams::init(
        config.architecture,
        train_ds.dim(),
        train_ds.num_classes(),
        &mut init_rng,
    );
    let head = match config.loss {
        LossKind::SoftCe => Head::Affine,
        LossKind::Ldam { .. } => Head::Cosine,
    };
    train_from(params.with_head(head), train_ds, mixer, config, eval)
}

/// Continue training existing parameters.
pub fn train_from<T: Scalar>(
    mut params: ModelParams<T>,
    train_ds: &LabeledDataset<T>,
    mixer: Option<&MixerConfig>,
    config: &TrainConfig,
    eval: Option<&LabeledDataset<T>>,
) -> Result<(ModelParams<T>, History)> {
    config.validate()?;
    if let Some(m) = mixer {
        m.validate()?;
    }
    if params.input_dim() != train_ds.dim() || params.num_classes() != train_ds.num_classes() {
        return Err(Error::ShapeMismatch("model does not match training data".into()));
    }
    if let Some(ev) = eval {
        if ev.dim() != train_ds.dim() || ev.num_classes() != train_ds.num_classes() {
            return Err(Error::ShapeMismatch(
                "eval set does not match training data".into(),
            ));
        }
    }
    let k = train_ds.num_classes();
    let counts = train_ds.class_counts();
    let index = mixer.filter(|m| m.method.uses_neighbors()).map(|m| {
        let same_class = m.method == crate::augment::MixMethod::SmoteMix;
        NeighborIndex::build(
            train_ds.features(),
            m.k_neighbors,
            same_class.then(|| train_ds.labels()),
        )
    });

    let mut shuffle_rng = rng::stream(config.seed, "shuffle");
    let mut pair_rng = rng::stream(config.seed, "pairs");
    let mut lambda_rng = rng::stream(config.seed, "lambda");
    let mut opt = Momentum::new(&params);
    let (mu, wd) = (T::of(config.momentum), T::of(config.weight_decay));
    let mut order: Vec<usize> = (0..train_ds.len()).collect();
    let mut history = History::default();

    for epoch in 0..config.epochs {
        let lr = lr_at(epoch, config);
        let lr_t = T::of(lr);
        let weights = drw_weights::<T>(&counts, epoch, config.drw_epoch, config.reweight)?;
        let weights = (!weights.is_uniform()).then_some(weights);
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;

        for batch in order.chunks(config.batch_size) {
            let (inputs, targets) = match mixer {
                None => (
                    train_ds.features().select(ndarray::Axis(0), batch),
                    one_hot(
                        &batch.iter().map(|&i| train_ds.labels()[i]).collect::<Vec<_>>(),
                        k,
                    ),
                ),
                Some(m) => {
                    let pairs = select_pairs(batch, m.method, index.as_ref(), &mut pair_rng)?;
                    let lambdas = draw_lambdas(m.lambda_mode, m.alpha, pairs.len(), &mut lambda_rng)?;
                    let mixed = mix_batch_per_pair(train_ds, &pairs, &lambdas, m, &counts)?;
                    (mixed.inputs, mixed.soft_labels)
                }
            };
            let (logits, cache) = params.forward_cached(&inputs)?;
            let (loss, grad_logits) = match config.loss {
                LossKind::SoftCe => soft_cross_entropy(&logits, &targets, weights.as_ref())?,
                LossKind::Ldam { max_margin, scale } => {
                    let hard = hard_labels_from_soft(&targets)?;
                    ldam_loss(
                        &logits,
                        &hard,
                        &counts,
                        T::of(max_margin),
                        T::of(scale),
                        weights.as_ref(),
                    )?
                }
            };
            let grads = params.backward(&inputs, &cache, &grad_logits);
            opt.step(&mut params, &grads, lr_t, mu, wd);
            epoch_loss += loss.f64() * batch.len() as f64;
        }

        let loss = epoch_loss / train_ds.len() as f64;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, loss });
        }
        let eval_balanced_accuracy = match eval {
            Some(ev) => Some(balanced_accuracy(
                &super::forward_logits(&params, ev.features())?,
                ev.labels(),
            )?),
            None => None,
        };
        log::debug!("epoch {epoch}: loss {loss:.5} lr {lr:.5}");
        history.epochs.push(EpochStats {
            epoch,
            loss,
            lr,
            eval_balanced_accuracy,
        });
    }
    Ok((params, history))
}
