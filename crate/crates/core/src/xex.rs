//! Batch softmax losses over a query × document similarity matrix.
//!
//! Row `i` is query `i`; the diagonal holds the matching pairs. Every loss
//! has the form `−(1/n)·Σ_i ln(e^{s_ii} / (e^{s_ii} + Σ_{s ∈ N} e^s))` and
//! differs only in the negative set `N`:
//!
//! | loss | negatives for query `i` |
//! |------|-------------------------|
//! | sampled softmax | off-diagonal entries of row `i` |
//! | negative mining | the `k` largest of those |
//! | cross-example softmax | every off-diagonal entry of the batch |
//! | cross-example mining | the `k` largest off-diagonal entries of the batch |
//!
//! Top-k selection orders by value (descending), then row, then column, so
//! mined sets are reproducible even with ties. The mined set is treated as
//! fixed when differentiating.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, norm, Matrix};
use crate::math::{exp, log_add_exp, log_sum_exp_iter};
use crate::reg_loss::LossGradient;
use crate::{Error, Result};

/// Square matrix of finite similarity scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { left: n * n, right: entries.len() });
        }
        crate::prob::check_finite(&entries)?;
        Ok(Self { n, entries })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch { left: m.rows(), right: m.cols() });
        }
        Self::new(m.rows(), m.into_vec())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// Returns a copy with `c` added to every entry.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.n, self.entries.iter().map(|x| x + c).collect())
    }
}

/// How the temperature `λ` enters the cosine similarity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemperatureMode {
    /// `⟨λ·x̂, λ·ŷ⟩ = λ²·cos`: both unit vectors are scaled.
    #[default]
    Squared,
    /// `λ·cos`.
    Linear,
}

impl TemperatureMode {
    pub fn scale(self, temperature: f64) -> f64 {
        match self {
            Self::Squared => temperature * temperature,
            Self::Linear => temperature,
        }
    }
}

/// `s_ij = scale · ⟨x_i/|x_i|, y_j/|y_j|⟩` with `scale` from [`TemperatureMode`].
pub fn cosine_similarity_matrix(
    queries: &Matrix,
    docs: &Matrix,
    temperature: f64,
    mode: TemperatureMode,
) -> Result<SimilarityMatrix> {
    if queries.rows() != docs.rows() {
        return Err(Error::DimensionMismatch { left: queries.rows(), right: docs.rows() });
    }
    if queries.cols() != docs.cols() {
        return Err(Error::DimensionMismatch { left: queries.cols(), right: docs.cols() });
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidParameter { name: "temperature", value: temperature });
    }
    let qn = unit_rows(queries)?;
    let dn = unit_rows(docs)?;
    let scale = mode.scale(temperature);
    let n = queries.rows();
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            entries.push(scale * dot(qn.row(i), dn.row(j)));
        }
    }
    SimilarityMatrix::new(n, entries)
}

pub(crate) fn unit_rows(m: &Matrix) -> Result<Matrix> {
    let mut out = m.clone();
    for r in 0..m.rows() {
        let len = norm(m.row(r));
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::ZeroNorm { row: r });
        }
        out.row_mut(r).iter_mut().for_each(|x| *x /= len);
    }
    Ok(out)
}

/// Either a fraction of the negative set (rounded up) or an explicit count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiningSpec {
    Fraction(f64),
    TopK(usize),
}

impl MiningSpec {
    /// Number of negatives kept out of `available`.
    pub fn resolve(&self, available: usize) -> Result<usize> {
        let k = match *self {
            Self::Fraction(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::InvalidParameter { name: "fraction", value: f });
                }
                libm::ceil(f * available as f64) as usize
            }
            Self::TopK(k) => k,
        };
        if k == 0 || k > available {
            return Err(Error::MiningOutOfRange { k, available });
        }
        Ok(k)
    }
}

/// Which negative set the batch loss uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "loss", rename_all = "snake_case", deny_unknown_fields)]
pub enum XexVariant {
    SampledSoftmax,
    NegativeMining { mining: MiningSpec },
    CrossExample,
    CrossExampleMining { mining: MiningSpec },
}

impl XexVariant {
    /// Short identifier used in result files.
    pub fn name(&self) -> &'static str {
        match self {
            Self::SampledSoftmax => "sampled_softmax",
            Self::NegativeMining { .. } => "snm",
            Self::CrossExample => "ce_softmax",
            Self::CrossExampleMining { .. } => "ce_mining",
        }
    }
}

/// Scores of query `i` against every non-matching document.
pub fn negatives_per_query(s: &SimilarityMatrix, i: usize) -> Result<Vec<f64>> {
    if i >= s.n {
        return Err(Error::IndexOutOfRange { index: i, len: s.n });
    }
    Ok(s.row(i).iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect())
}

/// Columns of the `k` hardest negatives of each row.
pub fn mined_per_query(s: &SimilarityMatrix, mining: &MiningSpec) -> Result<Vec<Vec<usize>>> {
    let k = mining.resolve(s.n.saturating_sub(1))?;
    Ok((0..s.n)
        .map(|i| {
            let row = s.row(i);
            let mut cols: Vec<usize> = (0..s.n).filter(|&j| j != i).collect();
            cols.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            cols.truncate(k);
            cols
        })
        .collect())
}

/// `(row, column)` of the `k` hardest off-diagonal entries of the batch.
pub fn mined_cross_example(s: &SimilarityMatrix, mining: &MiningSpec) -> Result<Vec<(usize, usize)>> {
    let k = mining.resolve(s.n * s.n.saturating_sub(1))?;
    let mut cells = off_diagonal(s.n);
    cells.sort_by(|&(ra, ca), &(rb, cb)| s.get(rb, cb).total_cmp(&s.get(ra, ca)).then((ra, ca).cmp(&(rb, cb))));
    cells.truncate(k);
    Ok(cells)
}

fn off_diagonal(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect()
}

/// Per-query loss with an arbitrary negative column set for each row.
pub fn per_query_negatives_loss(s: &SimilarityMatrix, negatives: &[Vec<usize>]) -> Result<LossGradient> {
    if negatives.len() != s.n {
        return Err(Error::DimensionMismatch { left: s.n, right: negatives.len() });
    }
    for (i, cols) in negatives.iter().enumerate() {
        if let Some(&j) = cols.iter().find(|&&j| j >= s.n || j == i) {
            return Err(Error::IndexOutOfRange { index: j, len: s.n });
        }
    }
    Ok(per_query_loss(s, negatives))
}

fn per_query_loss(s: &SimilarityMatrix, negatives: &[Vec<usize>]) -> LossGradient {
    let n = s.n;
    let mut grad = vec![0.0; n * n];
    if n == 0 {
        return LossGradient { value: 0.0, grad };
    }
    let inv_n = 1.0 / n as f64;
    let mut total = 0.0;
    for (i, cols) in negatives.iter().enumerate() {
        let pos = s.get(i, i);
        let lse = log_sum_exp_iter(core::iter::once(pos).chain(cols.iter().map(|&j| s.get(i, j))));
        total += lse - pos;
        grad[i * n + i] += (exp(pos - lse) - 1.0) * inv_n;
        for &j in cols {
            grad[i * n + j] += exp(s.get(i, j) - lse) * inv_n;
        }
    }
    LossGradient { value: total * inv_n, grad }
}

fn shared_negatives_loss(s: &SimilarityMatrix, cells: &[(usize, usize)]) -> LossGradient {
    let n = s.n;
    let mut grad = vec![0.0; n * n];
    if n == 0 {
        return LossGradient { value: 0.0, grad };
    }
    let inv_n = 1.0 / n as f64;
    let neg_lse = log_sum_exp_iter(cells.iter().map(|&(r, c)| s.get(r, c)));
    let mut total = 0.0;
    // Σ_i e^{L_N − lse_i}: each negative's gradient is e^{s − L_N} times this over n
    let mut weight = 0.0;
    for i in 0..n {
        let pos = s.get(i, i);
        let lse = log_add_exp(pos, neg_lse);
        total += lse - pos;
        grad[i * n + i] += (exp(pos - lse) - 1.0) * inv_n;
        weight += exp(neg_lse - lse);
    }
    for &(r, c) in cells {
        grad[r * n + c] += exp(s.get(r, c) - neg_lse) * weight * inv_n;
    }
    LossGradient { value: total * inv_n, grad }
}

/// Sampled softmax: each query ranks its match against its own row.
pub fn sampled_softmax_loss(s: &SimilarityMatrix) -> LossGradient {
    let negatives: Vec<Vec<usize>> = (0..s.n).map(|i| (0..s.n).filter(|&j| j != i).collect()).collect();
    per_query_loss(s, &negatives)
}

/// Sampled softmax restricted to the `k` hardest negatives of each row.
pub fn snm_loss(s: &SimilarityMatrix, mining: &MiningSpec) -> Result<LossGradient> {
    Ok(per_query_loss(s, &mined_per_query(s, mining)?))
}

/// Cross-example softmax: every match ranks against all off-diagonal pairs.
pub fn ce_softmax_loss(s: &SimilarityMatrix) -> LossGradient {
    shared_negatives_loss(s, &off_diagonal(s.n))
}

/// Cross-example softmax restricted to the `k` hardest off-diagonal pairs
/// of the whole batch.
pub fn ce_mining_loss(s: &SimilarityMatrix, mining: &MiningSpec) -> Result<LossGradient> {
    Ok(shared_negatives_loss(s, &mined_cross_example(s, mining)?))
}

pub fn xex_loss(s: &SimilarityMatrix, variant: &XexVariant) -> Result<LossGradient> {
    match variant {
        XexVariant::SampledSoftmax => Ok(sampled_softmax_loss(s)),
        XexVariant::NegativeMining { mining } => snm_loss(s, mining),
        XexVariant::CrossExample => Ok(ce_softmax_loss(s)),
        XexVariant::CrossExampleMining { mining } => ce_mining_loss(s, mining),
    }
}
