//! JSON checkpoints: architecture plus row-major weight arrays.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::network::{Architecture, Dense, Head, ModelParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    pub inputs: usize,
    pub outputs: usize,
    /// `[inputs × outputs]`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub architecture: Architecture,
    #[serde(default)]
    pub head: Head,
    pub layers: Vec<LayerRecord>,
}

impl<T: Scalar> From<&ModelParams<T>> for Checkpoint {
    fn from(p: &ModelParams<T>) -> Self {
        Self {
            architecture: p.architecture,
            head: p.head,
            layers: p
                .layers
                .iter()
                .map(|l| LayerRecord {
                    inputs: l.weight.nrows(),
                    outputs: l.weight.ncols(),
                    weights: l.weight.iter().map(|v| v.f64()).collect(),
                    bias: l.bias.iter().map(|v| v.f64()).collect(),
                })
                .collect(),
        }
    }
}

impl Checkpoint {
    pub fn into_params<T: Scalar>(self) -> Result<ModelParams<T>> {
        let layers = self
            .layers
            .into_iter()
            .map(|l| {
                let weight = Array2::from_shape_vec((l.inputs, l.outputs), l.weights)
                    .map_err(|e| Error::ShapeMismatch(e.to_string()))?
                    .mapv(T::of);
                let bias = Array1::from(l.bias).mapv(T::of);
                Ok(Dense { weight, bias })
            })
            .collect::<Result<Vec<_>>>()?;
        let params = ModelParams {
            architecture: self.architecture,
            head: self.head,
            layers,
        };
        params.validate()?;
        Ok(params)
    }
}

pub fn save_checkpoint<T: Scalar>(params: &ModelParams<T>, path: impl AsRef<Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(&Checkpoint::from(params))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<ModelParams<T>> {
    let ck: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    ck.into_params()
}
