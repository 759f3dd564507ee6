use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    /// Single sigmoid output: the predicted minority probability.
    Sigmoid,
    /// Single linear output for regression.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub head: Head,
}

impl MlpArchitecture {
    pub fn new(
        input_dim: usize,
        hidden: Vec<usize>,
        activation: Activation,
        head: Head,
    ) -> Result<Self> {
        let arch = Self {
            input_dim,
            hidden,
            activation,
            head,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// `[128, 16]` ReLU classifier.
    pub fn classifier(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: vec![128, 16],
            activation: Activation::Relu,
            head: Head::Sigmoid,
        }
    }

    /// One hidden layer of 10 tanh units with a linear output.
    pub fn sine_regressor() -> Self {
        Self {
            input_dim: 1,
            hidden: vec![10],
            activation: Activation::Tanh,
            head: Head::Linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "architecture needs positive input and at least one positive hidden width: {self:?}"
            )));
        }
        Ok(())
    }

    /// (fan_in, fan_out) of every layer including the output layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = self.input_dim;
        for &h in &self.hidden {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, 1));
        dims
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// fan_in x fan_out
    pub weight: Tensor,
    /// fan_out
    pub bias: Tensor,
}

/// Parameters of an MLP, in layer order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub arch: MlpArchitecture,
    pub layers: Vec<Layer>,
    pub init_seed: u64,
}

impl ParamSet {
    /// Weights uniform in `±sqrt(1/fan_in)`, biases zero.
    pub fn init(arch: &MlpArchitecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = seed::rng(seed);
        let layers = arch
            .layer_dims()
            .into_iter()
            .map(|(fan_in, fan_out)| {
                let bound = (1.0 / fan_in as f64).sqrt();
                let w = (0..fan_in * fan_out)
                    .map(|_| rng.gen_range(-bound..bound))
                    .collect();
                Layer {
                    weight: Tensor::matrix(fan_in, fan_out, w),
                    bias: Tensor::zeros(&[fan_out]),
                }
            })
            .collect();
        Ok(Self {
            arch: arch.clone(),
            layers,
            init_seed: seed,
        })
    }

    pub fn zeros(arch: &MlpArchitecture) -> Result<Self> {
        arch.validate()?;
        let layers = arch
            .layer_dims()
            .into_iter()
            .map(|(i, o)| Layer {
                weight: Tensor::zeros(&[i, o]),
                bias: Tensor::zeros(&[o]),
            })
            .collect();
        Ok(Self {
            arch: arch.clone(),
            layers,
            init_seed: 0,
        })
    }

    /// Flat view `[W0, b0, W1, b1, ...]`.
    pub fn tensors(&self) -> Vec<&Tensor> {
        self.layers
            .iter()
            .flat_map(|l| [&l.weight, &l.bias])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }

    /// Replace values from a flat list in [`ParamSet::tensors`] order.
    pub fn set_tensors(&mut self, values: Vec<Tensor>) -> Result<()> {
        let slots = self.tensors_mut();
        if slots.len() != values.len() {
            return Err(Error::shape(
                "set_tensors",
                format!("{} vs {}", slots.len(), values.len()),
            ));
        }
        for (slot, v) in slots.into_iter().zip(values) {
            if slot.shape() != v.shape() {
                return Err(Error::shape(
                    "set_tensors",
                    format!("{:?} vs {:?}", slot.shape(), v.shape()),
                ));
            }
            *slot = v;
        }
        Ok(())
    }

    /// Register every tensor as a leaf of `graph`.
    pub fn bind(&self, graph: &mut Graph) -> Vec<Var> {
        self.tensors()
            .into_iter()
            .map(|t| graph.leaf(t.clone()))
            .collect()
    }

    /// JSON with the architecture header followed by the layer tensors.
    /// Floats are written in shortest round-trip form, so loading restores
    /// every bit.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let params: ParamSet = serde_json::from_str(&text)?;
        params.check_shapes()?;
        Ok(params)
    }

    fn check_shapes(&self) -> Result<()> {
        let dims = self.arch.layer_dims();
        if dims.len() != self.layers.len() {
            return Err(Error::shape(
                "param_set",
                "layer count does not match architecture",
            ));
        }
        for ((i, o), l) in dims.into_iter().zip(&self.layers) {
            if l.weight.shape() != [i, o] || l.bias.shape() != [o] {
                return Err(Error::shape(
                    "param_set",
                    format!(
                        "layer {:?}/{:?} vs {i}x{o}",
                        l.weight.shape(),
                        l.bias.shape()
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Model outputs (probabilities or regression values) for the rows of `x`.
    pub fn predict(&self, x: &Tensor) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let params: Vec<Var> = self
            .tensors()
            .into_iter()
            .map(|t| g.constant(t.clone()))
            .collect();
        let xv = g.constant(x.clone());
        let out = forward(&mut g, &self.arch, &params, xv)?;
        Ok(g.value(out).data().to_vec())
    }
}

/// MLP forward pass over graph variables, so it works both for bound
/// parameters and for adapted parameters produced by a gradient step.
/// Returns an n x 1 node.
pub fn forward(graph: &mut Graph, arch: &MlpArchitecture, params: &[Var], x: Var) -> Result<Var> {
    let layers = arch.hidden.len() + 1;
    if params.len() != 2 * layers {
        return Err(Error::shape(
            "forward",
            format!("{} parameter tensors for {layers} layers", params.len()),
        ));
    }
    let xs = graph.shape(x);
    if xs.len() != 2 || xs[1] != arch.input_dim {
        return Err(Error::shape(
            "forward",
            format!("input {:?}, expected n x {}", xs, arch.input_dim),
        ));
    }
    let mut h = x;
    for layer in 0..layers {
        let z = graph.matmul(h, params[2 * layer])?;
        let z = graph.add_row(z, params[2 * layer + 1])?;
        h = if layer + 1 < layers {
            match arch.activation {
                Activation::Relu => graph.relu(z)?,
                Activation::Tanh => graph.tanh(z)?,
            }
        } else {
            match arch.head {
                Head::Sigmoid => graph.sigmoid(z)?,
                Head::Linear => z,
            }
        };
    }
    Ok(h)
}
