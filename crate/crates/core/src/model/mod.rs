//! Small classifiers (softmax-linear and one-hidden-layer MLP) trained with
//! hand-written backpropagation.

mod checkpoint;
mod loss;
mod network;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, LayerRecord};
pub use loss::{
    drw_weights, hard_labels_from_soft, ldam_loss, ldam_margins, one_hot, soft_cross_entropy, ClassWeights,
    Reweight,
};
pub use network::{export_logits, forward_logits, predict, Architecture, Dense, Head, ModelParams};
pub use train::{lr_at, train, train_from, EpochStats, History, LossKind, TrainConfig};

use ndarray::Array2;

use crate::error::Result;
use crate::scalar::Scalar;

/// Gradient of a logit-level loss with respect to every parameter, in
/// [`ModelParams::flatten`] order.
pub fn param_gradient<T, F>(params: &ModelParams<T>, inputs: &Array2<T>, loss: F) -> Result<(T, Vec<T>)>
where
    T: Scalar,
    F: Fn(&Array2<T>) -> Result<(T, Array2<T>)>,
{
    let (logits, cache) = params.forward_cached(inputs)?;
    let (value, grad_logits) = loss(&logits)?;
    let grads = params.backward(inputs, &cache, &grad_logits);
    let flat = grads
        .iter()
        .flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied())
        .collect();
    Ok((value, flat))
}
