//! Linear and one-hidden-layer tanh networks with manual backprop.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::prob::{softmax_into, ProbVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Architecture {
    #[default]
    Linear,
    Mlp1 {
        hidden: usize,
    },
}

/// One affine layer, `weights` is `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(out: usize, inp: usize) -> Self {
        Self { weights: Matrix::zeros(out, inp), bias: alloc::vec![0.0; out] }
    }

    fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    /// `out = x·Wᵀ + b` for a batch `x` (rows are examples).
    fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.output_dim());
        for r in 0..x.rows() {
            let xr = x.row(r);
            for (o, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = self.bias[o] + crate::linalg::dot(self.weights.row(o), xr);
            }
        }
        out
    }

    /// Accumulates `Gᵀx` and column sums of `G` into `grad`.
    fn accumulate_grad(&self, x: &Matrix, g: &Matrix, grad: &mut Dense) {
        for r in 0..x.rows() {
            let xr = x.row(r);
            for (o, &go) in g.row(r).iter().enumerate() {
                grad.bias[o] += go;
                for (w, &xi) in grad.weights.row_mut(o).iter_mut().zip(xr) {
                    *w += go * xi;
                }
            }
        }
    }

    /// `G·W`, the gradient with respect to the layer input.
    fn input_grad(&self, g: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(g.rows(), self.input_dim());
        for r in 0..g.rows() {
            for (o, &go) in g.row(r).iter().enumerate() {
                for (v, &w) in out.row_mut(r).iter_mut().zip(self.weights.row(o)) {
                    *v += go * w;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub architecture: Architecture,
    pub layers: Vec<Dense>,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    hidden: Option<Matrix>,
    pub scores: Matrix,
}

impl ModelParams {
    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            architecture: self.architecture,
            layers: self.layers.iter().map(|l| Dense::zeros(l.output_dim(), l.input_dim())).collect(),
        }
    }

    /// Parameter blocks in a fixed order (weights then bias, layer by layer).
    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    pub fn blocks_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers.iter_mut().flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
    }

    pub fn num_params(&self) -> usize {
        self.blocks().map(<[f64]>::len).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks().flatten().copied().collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::DimensionMismatch { left: self.num_params(), right: values.len() });
        }
        let mut it = values.iter();
        for block in self.blocks_mut() {
            block.iter_mut().zip(&mut it).for_each(|(p, &v)| *p = v);
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().flatten().all(|v| v.is_finite())
    }

    /// Sum of absolute parameter differences.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if self.num_params() != other.num_params() || self.architecture != other.architecture {
            return Err(Error::DimensionMismatch { left: self.num_params(), right: other.num_params() });
        }
        Ok(self.blocks().flatten().zip(other.blocks().flatten()).map(|(a, b)| (a - b).abs()).sum())
    }

    fn check_inputs(&self, inputs: &Matrix) -> Result<()> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch { left: self.input_dim(), right: inputs.cols() });
        }
        Ok(())
    }

    pub fn forward_cached(&self, inputs: &Matrix) -> Result<Activations> {
        self.check_inputs(inputs)?;
        Ok(match self.architecture {
            Architecture::Linear => Activations { hidden: None, scores: self.layers[0].apply(inputs) },
            Architecture::Mlp1 { .. } => {
                let mut h = self.layers[0].apply(inputs);
                h.as_mut_slice().iter_mut().for_each(|v| *v = libm::tanh(*v));
                let scores = self.layers[1].apply(&h);
                Activations { hidden: Some(h), scores }
            }
        })
    }

    /// Gradient of a loss with respect to the parameters, given the inputs,
    /// the cached activations and `dL/dscores`. Also returns `dL/dinputs`
    /// when `want_input_grad` is set.
    pub fn backward(
        &self,
        inputs: &Matrix,
        acts: &Activations,
        grad_scores: &Matrix,
        want_input_grad: bool,
    ) -> (ModelParams, Option<Matrix>) {
        let mut grad = self.zeros_like();
        match (&self.architecture, &acts.hidden) {
            (Architecture::Mlp1 { .. }, Some(h)) => {
                self.layers[1].accumulate_grad(h, grad_scores, &mut grad.layers[1]);
                let mut dz = self.layers[1].input_grad(grad_scores);
                for (d, &hv) in dz.as_mut_slice().iter_mut().zip(h.as_slice()) {
                    *d *= 1.0 - hv * hv;
                }
                self.layers[0].accumulate_grad(inputs, &dz, &mut grad.layers[0]);
                let dx = want_input_grad.then(|| self.layers[0].input_grad(&dz));
                (grad, dx)
            }
            _ => {
                self.layers[0].accumulate_grad(inputs, grad_scores, &mut grad.layers[0]);
                let dx = want_input_grad.then(|| self.layers[0].input_grad(grad_scores));
                (grad, dx)
            }
        }
    }
}

/// Uniform weights in `±1/√fan_in`, zero biases.
pub fn init_params(seed: u64, architecture: Architecture, d: usize, k: usize) -> Result<ModelParams> {
    if d == 0 {
        return Err(Error::InvalidSize("input dimension must be positive".into()));
    }
    if k == 0 {
        return Err(Error::InvalidSize("output dimension must be positive".into()));
    }
    let shapes: Vec<(usize, usize)> = match architecture {
        Architecture::Linear => alloc::vec![(k, d)],
        Architecture::Mlp1 { hidden: 0 } => {
            return Err(Error::InvalidSize("hidden width must be positive".into()));
        }
        Architecture::Mlp1 { hidden } => alloc::vec![(hidden, d), (k, hidden)],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = shapes
        .into_iter()
        .map(|(out, inp)| {
            let bound = 1.0 / libm::sqrt(inp as f64);
            let mut layer = Dense::zeros(out, inp);
            layer.weights.as_mut_slice().iter_mut().for_each(|w| *w = rng.random_range(-bound..bound));
            layer
        })
        .collect();
    Ok(ModelParams { architecture, layers })
}

/// Raw scores, one row per input row.
pub fn forward(params: &ModelParams, inputs: &Matrix) -> Result<Matrix> {
    Ok(params.forward_cached(inputs)?.scores)
}

/// `softmax(λ·scores)` per row.
pub fn forward_probs(params: &ModelParams, inputs: &Matrix, temperature: f64) -> Result<Vec<ProbVector>> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidParameter { name: "temperature", value: temperature });
    }
    let scores = forward(params, inputs)?;
    if params.output_dim() < 2 {
        return Err(Error::TooFewClasses(params.output_dim()));
    }
    let mut buf = alloc::vec![0.0; params.output_dim()];
    (0..scores.rows())
        .map(|r| {
            softmax_into(scores.row(r), temperature, &mut buf);
            ProbVector::new(buf.clone())
        })
        .collect()
}
