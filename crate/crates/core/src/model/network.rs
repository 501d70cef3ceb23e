use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::argmax;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    /// Affine map straight to logits.
    Linear,
    /// One ReLU hidden layer.
    Mlp { hidden: usize },
}

impl Default for Architecture {
    fn default() -> Self {
        Self::Mlp { hidden: 64 }
    }
}

/// How the last layer turns features into logits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// `h · W + b`.
    #[default]
    Affine,
    /// Cosine similarity between `h` and every column of `W`, so logits lie
    /// in `[-1, 1]`; the bias is unused and stays zero. Margin losses with
    /// a fixed scale expect this head.
    Cosine,
}

/// Norms below this are treated as this value when normalizing.
const NORM_FLOOR: f64 = 1e-12;

/// `out = input · weight + bias`, with `weight` stored `[in × out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> Dense<T> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    /// Uniform in `±1/√fan_in`.
    fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut draw = || T::of(rng.random_range(-bound..bound));
        let weight = Array2::from_shape_simple_fn((inputs, outputs), &mut draw);
        let bias = Array1::from_shape_simple_fn(outputs, &mut draw);
        Self { weight, bias }
    }

    fn apply(&self, x: &Array2<T>) -> Array2<T> {
        x.dot(&self.weight) + &self.bias
    }
}

/// Model weights `θ`; layer shapes chain from the input dimension to `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub architecture: Architecture,
    pub head: Head,
    pub layers: Vec<Dense<T>>,
}

/// Activations kept from the forward pass for backpropagation.
pub struct ForwardCache<T> {
    hidden_pre: Option<Array2<T>>,
    hidden: Option<Array2<T>>,
    cosine: Option<CosineCache<T>>,
}

struct CosineCache<T> {
    /// Row-normalized features.
    feat_unit: Array2<T>,
    feat_norm: Array1<T>,
    /// Column-normalized weights.
    weight_unit: Array2<T>,
    weight_norm: Array1<T>,
}

fn cosine_forward<T: Scalar>(feat: &Array2<T>, weight: &Array2<T>) -> (Array2<T>, CosineCache<T>) {
    let floor = T::of(NORM_FLOOR);
    let feat_norm = feat.map_axis(Axis(1), |r| r.dot(&r).sqrt().max(floor));
    let weight_norm = weight.map_axis(Axis(0), |c| c.dot(&c).sqrt().max(floor));
    let feat_unit = feat / &feat_norm.view().insert_axis(Axis(1));
    let weight_unit = weight / &weight_norm;
    let z = feat_unit.dot(&weight_unit);
    (
        z,
        CosineCache {
            feat_unit,
            feat_norm,
            weight_unit,
            weight_norm,
        },
    )
}

/// Returns `(∂L/∂feat, ∂L/∂weight)` for the cosine head.
fn cosine_backward<T: Scalar>(c: &CosineCache<T>, grad_z: &Array2<T>) -> (Array2<T>, Array2<T>) {
    // through x̂ = x/|x|: ∂x = (∂x̂ - x̂ (x̂·∂x̂)) / |x|
    let g_fu = grad_z.dot(&c.weight_unit.t());
    let along = (&g_fu * &c.feat_unit).sum_axis(Axis(1)).insert_axis(Axis(1));
    let g_feat = (&g_fu - &(&c.feat_unit * &along)) / c.feat_norm.view().insert_axis(Axis(1));
    let g_wu = c.feat_unit.t().dot(grad_z);
    let along = (&g_wu * &c.weight_unit).sum_axis(Axis(0));
    let g_weight = (&g_wu - &(&c.weight_unit * &along)) / &c.weight_norm;
    (g_feat, g_weight)
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(architecture: Architecture, input_dim: usize, num_classes: usize) -> Self {
        let layers = match architecture {
            Architecture::Linear => vec![Dense::zeros(input_dim, num_classes)],
            Architecture::Mlp { hidden } => {
                vec![Dense::zeros(input_dim, hidden), Dense::zeros(hidden, num_classes)]
            }
        };
        Self {
            architecture,
            head: Head::Affine,
            layers,
        }
    }

    pub fn init<R: Rng + ?Sized>(
        architecture: Architecture,
        input_dim: usize,
        num_classes: usize,
        rng: &mut R,
    ) -> Self {
        let layers = match architecture {
            Architecture::Linear => vec![Dense::init(input_dim, num_classes, rng)],
            Architecture::Mlp { hidden } => vec![
                Dense::init(input_dim, hidden, rng),
                Dense::init(hidden, num_classes, rng),
            ],
        };
        Self {
            architecture,
            head: Head::Affine,
            layers,
        }
    }

    /// Switch the output head; a cosine head gets a zero bias.
    pub fn with_head(mut self, head: Head) -> Self {
        self.head = head;
        if head == Head::Cosine {
            let last = self.layers.last_mut().expect("at least one layer");
            last.bias.fill(T::zero());
        }
        self
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().expect("at least one layer").weight.ncols()
    }

    /// Checks the layer chain against the architecture.
    pub fn validate(&self) -> Result<()> {
        let expected = match self.architecture {
            Architecture::Linear => 1,
            Architecture::Mlp { .. } => 2,
        };
        if self.layers.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{:?} needs {expected} layers, found {}",
                self.architecture,
                self.layers.len()
            )));
        }
        if let Architecture::Mlp { hidden } = self.architecture {
            if self.layers[0].weight.ncols() != hidden {
                return Err(Error::ShapeMismatch(format!(
                    "hidden width {} != {hidden}",
                    self.layers[0].weight.ncols()
                )));
            }
        }
        for (a, b) in self.layers.iter().zip(self.layers.iter().skip(1)) {
            if a.weight.ncols() != b.weight.nrows() {
                return Err(Error::ShapeMismatch("layer shapes do not chain".into()));
            }
        }
        for l in &self.layers {
            if l.bias.len() != l.weight.ncols() {
                return Err(Error::ShapeMismatch(
                    "bias length differs from layer width".into(),
                ));
            }
            if l.weight.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::ShapeMismatch("non-finite parameter".into()));
            }
        }
        Ok(())
    }

    fn check_input(&self, inputs: &Array2<T>) -> Result<()> {
        if inputs.ncols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "inputs have {} features, model expects {}",
                inputs.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub(crate) fn forward_cached(&self, inputs: &Array2<T>) -> Result<(Array2<T>, ForwardCache<T>)> {
        self.check_input(inputs)?;
        let (hidden_pre, hidden) = match self.architecture {
            Architecture::Linear => (None, None),
            Architecture::Mlp { .. } => {
                let pre = self.layers[0].apply(inputs);
                let hidden = pre.mapv(|v| v.max(T::zero()));
                (Some(pre), Some(hidden))
            }
        };
        let feat = hidden.as_ref().unwrap_or(inputs);
        let last = self.layers.last().expect("at least one layer");
        let (logits, cosine) = match self.head {
            Head::Affine => (last.apply(feat), None),
            Head::Cosine => {
                let (z, c) = cosine_forward(feat, &last.weight);
                (z, Some(c))
            }
        };
        Ok((
            logits,
            ForwardCache {
                hidden_pre,
                hidden,
                cosine,
            },
        ))
    }

    /// Parameter gradients given `∂L/∂logits`.
    pub(crate) fn backward(
        &self,
        inputs: &Array2<T>,
        cache: &ForwardCache<T>,
        grad_logits: &Array2<T>,
    ) -> Vec<Dense<T>> {
        let feat = cache.hidden.as_ref().unwrap_or(inputs);
        let last = self.layers.last().expect("at least one layer");
        let (out, grad_feat) = match &cache.cosine {
            None => (
                Dense {
                    weight: feat.t().dot(grad_logits),
                    bias: grad_logits.sum_axis(Axis(0)),
                },
                grad_logits.dot(&last.weight.t()),
            ),
            Some(c) => {
                let (g_feat, g_weight) = cosine_backward(c, grad_logits);
                (
                    Dense {
                        weight: g_weight,
                        bias: Array1::zeros(last.bias.len()),
                    },
                    g_feat,
                )
            }
        };
        match &cache.hidden_pre {
            None => vec![out],
            Some(pre) => {
                let mut grad_hidden = grad_feat;
                grad_hidden.zip_mut_with(pre, |g, &p| {
                    if p <= T::zero() {
                        *g = T::zero();
                    }
                });
                let first = Dense {
                    weight: inputs.t().dot(&grad_hidden),
                    bias: grad_hidden.sum_axis(Axis(0)),
                };
                vec![first, out]
            }
        }
    }

    /// Flattened view of every parameter, layer by layer (weights row-major,
    /// then bias).
    pub fn flatten(&self) -> Vec<T> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Mutable access to the `idx`-th entry of [`Self::flatten`].
    pub fn param_mut(&mut self, mut idx: usize) -> &mut T {
        for l in &mut self.layers {
            let w = l.weight.len();
            if idx < w {
                return l.weight.iter_mut().nth(idx).expect("in range");
            }
            idx -= w;
            if idx < l.bias.len() {
                return &mut l.bias[idx];
            }
            idx -= l.bias.len();
        }
        panic!("parameter index out of range")
    }
}

/// Class scores `f(x)` before softmax.
pub fn forward_logits<T: Scalar>(params: &ModelParams<T>, inputs: &Array2<T>) -> Result<Array2<T>> {
    params.forward_cached(inputs).map(|(z, _)| z)
}

/// Argmax class per row; ties go to the lowest class id.
pub fn predict<T: Scalar>(params: &ModelParams<T>, inputs: &Array2<T>) -> Result<Vec<usize>> {
    let z = forward_logits(params, inputs)?;
    Ok(z.rows().into_iter().map(argmax).collect())
}

/// `[n × K]` logits for every row of a dataset.
pub fn export_logits<T: Scalar>(
    params: &ModelParams<T>,
    dataset: &crate::data::LabeledDataset<T>,
) -> Result<Array2<T>> {
    forward_logits(params, dataset.features())
}
