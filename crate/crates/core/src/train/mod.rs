//! Seeded minibatch SGD for classifiers and dual encoders, plus the
//! churn and retrieval experiment drivers.

mod data;
mod experiment;
mod model;

pub use data::{
    gen_gaussian_blobs, gen_paired_embeddings, holdout_split, BlobSpec, Dataset, Mixing, PairedDataset, PairedSpec,
};
pub use experiment::*;
pub use model::{forward, forward_probs, init_params, Activations, Architecture, Dense, ModelParams};

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, Matrix};
use crate::reg_loss::{reg_loss_grad_into, RegParams};
use crate::xex::{unit_rows, xex_loss, SimilarityMatrix, TemperatureMode, XexVariant};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFamily {
    /// Regularized softmax log-loss on class labels.
    #[default]
    Classification,
    /// Batch ranking loss over the cosine similarities of a dual encoder.
    Xex(XexVariant),
}

fn default_momentum() -> f64 {
    0.9
}

fn default_temperature() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub seed_init: u64,
    pub seed_shuffle: u64,
    pub learning_rate: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    #[serde(default)]
    pub architecture: Architecture,
    #[serde(default = "RegParams::none")]
    pub reg: RegParams,
    #[serde(default)]
    pub loss: LossFamily,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub temperature_mode: TemperatureMode,
    /// Output width of each encoder (retrieval only).
    #[serde(default)]
    pub embed_dim: Option<usize>,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter { name: "learning_rate", value: self.learning_rate });
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidParameter { name: "momentum", value: self.momentum });
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidSize("batch_size must be at least 1".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidParameter { name: "temperature", value: self.temperature });
        }
        if self.embed_dim == Some(0) {
            return Err(Error::InvalidSize("embed_dim must be positive".into()));
        }
        if let Architecture::Mlp1 { hidden: 0 } = self.architecture {
            return Err(Error::InvalidSize("hidden width must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub params: ModelParams,
    pub history: Vec<EpochStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedDualEncoder {
    pub query: ModelParams,
    pub doc: ModelParams,
    pub history: Vec<EpochStats>,
}

/// Seed of the document tower, derived from `seed_init`.
pub fn doc_tower_seed(seed_init: u64) -> u64 {
    seed_init ^ 0x9E37_79B9_7F4A_7C15
}

/// `v ← μv + g`, `w ← w − η·v`.
fn sgd_step(params: &mut ModelParams, velocity: &mut ModelParams, grad: &ModelParams, lr: f64, mu: f64) {
    for ((p, v), g) in params.blocks_mut().zip(velocity.blocks_mut()).zip(grad.blocks()) {
        for ((pi, vi), &gi) in p.iter_mut().zip(v.iter_mut()).zip(g) {
            *vi = mu * *vi + gi;
            *pi -= lr * *vi;
        }
    }
}

/// Mean regularized loss over a batch and its parameter gradient.
pub fn classifier_objective(
    params: &ModelParams,
    inputs: &Matrix,
    labels: &[usize],
    reg: &RegParams,
    temperature: f64,
) -> Result<(f64, ModelParams)> {
    if labels.len() != inputs.rows() {
        return Err(Error::DimensionMismatch { left: inputs.rows(), right: labels.len() });
    }
    if labels.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let k = params.output_dim();
    if k < 2 {
        return Err(Error::TooFewClasses(k));
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::IndexOutOfRange { index: y, len: k });
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidParameter { name: "temperature", value: temperature });
    }
    let acts = params.forward_cached(inputs)?;
    let inv_b = 1.0 / labels.len() as f64;
    let mut g = Matrix::zeros(labels.len(), k);
    let mut scratch = alloc::vec![0.0; k];
    let mut total = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        total += reg_loss_grad_into(acts.scores.row(r), y, reg, temperature, g.row_mut(r), &mut scratch);
        g.row_mut(r).iter_mut().for_each(|v| *v *= inv_b);
    }
    let (grad, _) = params.backward(inputs, &acts, &g, false);
    Ok((total * inv_b, grad))
}

/// Fraction of rows whose argmax score equals the label.
pub fn accuracy(params: &ModelParams, inputs: &Matrix, labels: &[usize]) -> Result<f64> {
    let scores = forward(params, inputs)?;
    if labels.len() != scores.rows() {
        return Err(Error::DimensionMismatch { left: scores.rows(), right: labels.len() });
    }
    let hits = labels.iter().enumerate().filter(|&(r, &y)| crate::prob::argmax(scores.row(r)) == y).count();
    Ok(hits as f64 / labels.len().max(1) as f64)
}

pub fn train_classifier(config: &TrainConfig, data: &Dataset) -> Result<TrainedModel> {
    config.validate()?;
    let mut params = init_params(config.seed_init, config.architecture, data.dim(), data.k_classes)?;
    let mut velocity = params.zeros_like();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed_shuffle);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let x = data.inputs.select_rows(batch);
            let y: Vec<usize> = batch.iter().map(|&i| data.labels[i]).collect();
            let (loss, grad) = classifier_objective(&params, &x, &y, &config.reg, config.temperature)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            total += loss * batch.len() as f64;
            sgd_step(&mut params, &mut velocity, &grad, config.learning_rate, config.momentum);
        }
        if !params.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(EpochStats {
            epoch,
            mean_loss: total / data.len() as f64,
            train_accuracy: Some(accuracy(&params, &data.inputs, &data.labels)?),
        });
    }
    Ok(TrainedModel { params, history })
}

/// Batch loss of a dual encoder and the gradients of both towers.
#[derive(Debug, Clone)]
pub struct DualGradient {
    pub value: f64,
    pub query: ModelParams,
    pub doc: ModelParams,
}

/// Cosine similarity of two batches of embeddings, unscaled.
pub fn cosine_matrix(u: &Matrix, v: &Matrix) -> Result<Matrix> {
    if u.cols() != v.cols() {
        return Err(Error::DimensionMismatch { left: u.cols(), right: v.cols() });
    }
    let un = unit_rows(u)?;
    let vn = unit_rows(v)?;
    let mut out = Matrix::zeros(u.rows(), v.rows());
    for i in 0..u.rows() {
        for j in 0..v.rows() {
            out.set(i, j, dot(un.row(i), vn.row(j)));
        }
    }
    Ok(out)
}

/// Pulls `dL/dx̂` back through `x ↦ x/|x|`: `(I − x̂x̂ᵀ)·g / |x|`.
fn normalize_backward(x: &Matrix, xn: &Matrix, g_hat: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for r in 0..x.rows() {
        let len = crate::linalg::norm(x.row(r));
        let proj = dot(g_hat.row(r), xn.row(r));
        for ((o, &g), &u) in out.row_mut(r).iter_mut().zip(g_hat.row(r)).zip(xn.row(r)) {
            *o = (g - proj * u) / len;
        }
    }
    out
}

pub fn dual_encoder_objective(
    query_params: &ModelParams,
    doc_params: &ModelParams,
    queries: &Matrix,
    docs: &Matrix,
    variant: &XexVariant,
    temperature: f64,
    mode: TemperatureMode,
) -> Result<DualGradient> {
    if queries.rows() != docs.rows() {
        return Err(Error::DimensionMismatch { left: queries.rows(), right: docs.rows() });
    }
    if query_params.output_dim() != doc_params.output_dim() {
        return Err(Error::DimensionMismatch { left: query_params.output_dim(), right: doc_params.output_dim() });
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidParameter { name: "temperature", value: temperature });
    }
    let n = queries.rows();
    let qa = query_params.forward_cached(queries)?;
    let da = doc_params.forward_cached(docs)?;
    let un = unit_rows(&qa.scores)?;
    let vn = unit_rows(&da.scores)?;
    let scale = mode.scale(temperature);
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            entries.push(scale * dot(un.row(i), vn.row(j)));
        }
    }
    let s = SimilarityMatrix::new(n, entries)?;
    let lg = xex_loss(&s, variant)?;
    let e = un.cols();
    let mut gu = Matrix::zeros(n, e);
    let mut gv = Matrix::zeros(n, e);
    for i in 0..n {
        for j in 0..n {
            let g = scale * lg.grad[i * n + j];
            if g == 0.0 {
                continue;
            }
            for ((a, &b), (c, &d)) in
                gu.row_mut(i).iter_mut().zip(vn.row(j)).zip(gv.row_mut(j).iter_mut().zip(un.row(i)))
            {
                *a += g * b;
                *c += g * d;
            }
        }
    }
    let gq = normalize_backward(&qa.scores, &un, &gu);
    let gd = normalize_backward(&da.scores, &vn, &gv);
    let (query, _) = query_params.backward(queries, &qa, &gq, false);
    let (doc, _) = doc_params.backward(docs, &da, &gd, false);
    Ok(DualGradient { value: lg.value, query, doc })
}

/// Trains query and document towers on matching rows. Trailing pairs that do
/// not fill a whole batch are skipped in each epoch; a batch size above the
/// dataset size is capped at the dataset size.
pub fn train_dual_encoder(config: &TrainConfig, data: &PairedDataset) -> Result<TrainedDualEncoder> {
    config.validate()?;
    let variant = match config.loss {
        LossFamily::Xex(v) => v,
        LossFamily::Classification => {
            return Err(Error::InvalidSize("dual encoder training needs an xex loss".into()));
        }
    };
    let e = config.embed_dim.ok_or_else(|| Error::InvalidSize("embed_dim is required for retrieval".into()))?;
    if data.len() < 2 {
        return Err(Error::InvalidSize("need at least two pairs".into()));
    }
    let mut query = init_params(config.seed_init, config.architecture, data.queries.cols(), e)?;
    let mut doc = init_params(doc_tower_seed(config.seed_init), config.architecture, data.docs.cols(), e)?;
    let mut vq = query.zeros_like();
    let mut vd = doc.zeros_like();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed_shuffle);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let bs = config.batch_size.min(data.len()).max(2);
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks_exact(bs) {
            let q = data.queries.select_rows(batch);
            let d = data.docs.select_rows(batch);
            let g = dual_encoder_objective(&query, &doc, &q, &d, &variant, config.temperature, config.temperature_mode)
                .map_err(|err| match err {
                    Error::ZeroNorm { .. } => Error::Diverged { epoch },
                    other => other,
                })?;
            if !g.value.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            total += g.value;
            batches += 1;
            sgd_step(&mut query, &mut vq, &g.query, config.learning_rate, config.momentum);
            sgd_step(&mut doc, &mut vd, &g.doc, config.learning_rate, config.momentum);
        }
        if !query.is_finite() || !doc.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(EpochStats { epoch, mean_loss: total / batches.max(1) as f64, train_accuracy: None });
    }
    Ok(TrainedDualEncoder { query, doc, history })
}
