//! Seeded synthetic datasets and the holdout split.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::{Error, Result};

/// Labelled classification data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Matrix,
    pub labels: Vec<usize>,
    pub k_classes: usize,
}

impl Dataset {
    pub fn new(inputs: Matrix, labels: Vec<usize>, k_classes: usize) -> Result<Self> {
        if inputs.rows() == 0 {
            return Err(Error::Empty("dataset"));
        }
        if labels.len() != inputs.rows() {
            return Err(Error::DimensionMismatch { left: inputs.rows(), right: labels.len() });
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= k_classes) {
            return Err(Error::IndexOutOfRange { index: y, len: k_classes });
        }
        crate::prob::check_finite(inputs.as_slice())?;
        Ok(Self { inputs, labels, k_classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            inputs: self.inputs.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            k_classes: self.k_classes,
        }
    }
}

/// Row `i` of `queries` matches row `i` of `docs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDataset {
    pub queries: Matrix,
    pub docs: Matrix,
}

impl PairedDataset {
    pub fn len(&self) -> usize {
        self.queries.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.rows() == 0
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self { queries: self.queries.select_rows(idx), docs: self.docs.select_rows(idx) }
    }
}

/// Isotropic unit-variance Gaussian clusters, one per class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub seed: u64,
    pub m: usize,
    pub d: usize,
    pub k: usize,
    pub separation: f64,
}

/// Class `c` is centred at `(separation/√2)·e_c`, so every pair of means is
/// `separation` apart. Sample `i` has label `i mod K`.
pub fn gen_gaussian_blobs(seed: u64, m: usize, d: usize, k: usize, separation: f64) -> Result<Dataset> {
    if k < 2 || m < k || d < k {
        return Err(Error::InvalidSize(format!("blobs need K >= 2, m >= K, d >= K (m={m}, d={d}, K={k})")));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::InvalidParameter { name: "separation", value: separation });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = separation / core::f64::consts::SQRT_2;
    let mut inputs = Matrix::zeros(m, d);
    let mut labels = Vec::with_capacity(m);
    for i in 0..m {
        let y = i % k;
        for (j, x) in inputs.row_mut(i).iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            *x = z + if j == y { offset } else { 0.0 };
        }
        labels.push(y);
    }
    Dataset::new(inputs, labels, k)
}

impl BlobSpec {
    pub fn generate(&self) -> Result<Dataset> {
        gen_gaussian_blobs(self.seed, self.m, self.d, self.k, self.separation)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mixing {
    /// Independent Gaussian maps with `N(0, 1/latent_dim)` entries.
    #[default]
    Random,
    /// Both views see the latent directly (requires view dims = latent dim).
    Identity,
}

/// Two noisy linear views of a shared Gaussian latent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairedSpec {
    pub seed: u64,
    pub n: usize,
    pub latent_dim: usize,
    pub query_dim: usize,
    pub doc_dim: usize,
    pub noise: f64,
    #[serde(default)]
    pub mixing: Mixing,
}

/// `query_i = A·z_i + noise·ε`, `doc_i = B·z_i + noise·ε′` with `z_i` standard
/// normal and fixed random `A`, `B`; views have the latent's dimension.
pub fn gen_paired_embeddings(seed: u64, n: usize, latent_dim: usize, noise: f64) -> Result<PairedDataset> {
    PairedSpec { seed, n, latent_dim, query_dim: latent_dim, doc_dim: latent_dim, noise, mixing: Mixing::Random }
        .generate()
}

impl PairedSpec {
    pub fn generate(&self) -> Result<PairedDataset> {
        if self.n < 2 || self.latent_dim == 0 || self.query_dim == 0 || self.doc_dim == 0 {
            return Err(Error::InvalidSize(format!("paired data needs n >= 2 and nonzero dims, got n={}", self.n)));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidParameter { name: "noise", value: self.noise });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (a, b) = match self.mixing {
            Mixing::Identity => {
                if self.query_dim != self.latent_dim || self.doc_dim != self.latent_dim {
                    return Err(Error::InvalidSize("identity mixing needs view dims equal to latent dim".into()));
                }
                (Matrix::identity(self.latent_dim), Matrix::identity(self.latent_dim))
            }
            Mixing::Random => {
                let scale = 1.0 / libm::sqrt(self.latent_dim as f64);
                (
                    gaussian_matrix(&mut rng, self.query_dim, self.latent_dim, scale),
                    gaussian_matrix(&mut rng, self.doc_dim, self.latent_dim, scale),
                )
            }
        };
        let mut queries = Matrix::zeros(self.n, self.query_dim);
        let mut docs = Matrix::zeros(self.n, self.doc_dim);
        let mut z = alloc::vec![0.0; self.latent_dim];
        for i in 0..self.n {
            z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            a.mul_vec(&z, queries.row_mut(i));
            b.mul_vec(&z, docs.row_mut(i));
            for v in queries.row_mut(i).iter_mut().chain(docs.row_mut(i).iter_mut()) {
                let e: f64 = rng.sample(StandardNormal);
                *v += self.noise * e;
            }
        }
        Ok(PairedDataset { queries, docs })
    }
}

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    m.as_mut_slice().iter_mut().for_each(|v| {
        let z: f64 = rng.sample(StandardNormal);
        *v = scale * z;
    });
    m
}

/// Deterministic `(train, holdout)` index split of `0..m`; the holdout takes
/// `round(m·fraction)` indices of a seeded permutation (at least one each).
pub fn holdout_split(seed: u64, m: usize, fraction: f64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter { name: "holdout_fraction", value: fraction });
    }
    if m < 2 {
        return Err(Error::InvalidSize(format!("cannot split {m} samples")));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (libm::round(m as f64 * fraction) as usize).clamp(1, m - 1);
    let test = idx.split_off(m - n_test);
    Ok((idx, test))
}
