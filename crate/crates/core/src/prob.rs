//! Probability primitives on the simplex.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::math::{self, exp, ln, xlogx};
use crate::{Error, Result};

/// Entries in `[-NEG_CLAMP, 0)` are treated as rounding noise and set to zero.
const NEG_CLAMP: f64 = 1e-12;
/// Largest deviation of the sum from 1 that is silently renormalized.
const SUM_TOL: f64 = 1e-9;

/// A point on the probability simplex with at least two coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooFewClasses(values.len()));
        }
        for (index, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index, value: *v });
            }
            if *v < 0.0 {
                if *v < -NEG_CLAMP {
                    return Err(Error::NegativeProbability { index, value: *v });
                }
                *v = 0.0;
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::NotNormalized { sum });
        }
        if sum != 1.0 {
            values.iter_mut().for_each(|v| *v /= sum);
        }
        Ok(Self(values))
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooFewClasses(k));
        }
        Ok(Self(alloc::vec![1.0 / k as f64; k]))
    }

    pub fn one_hot(k: usize, index: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooFewClasses(k));
        }
        if index >= k {
            return Err(Error::IndexOutOfRange { index, len: k });
        }
        let mut v = alloc::vec![0.0; k];
        v[index] = 1.0;
        Ok(Self(v))
    }

    /// `(1 - p, p)`: class 1 carries the probability of a [`BinaryProb`].
    pub fn binary(p: BinaryProb) -> Self {
        Self(alloc::vec![1.0 - p.get(), p.get()])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn get(&self, j: usize) -> f64 {
        self.0[j]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Lowest index among the maximal entries.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

/// Unconstrained finite scores (logits).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("score vector"));
        }
        check_finite(&values)?;
        Ok(Self(values))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ScoreVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ScoreVector> for Vec<f64> {
    fn from(s: ScoreVector) -> Self {
        s.0
    }
}

/// Probability of class 1 in a binary problem.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct BinaryProb(f64);

impl BinaryProb {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        Ok(Self(p))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for BinaryProb {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<BinaryProb> for f64 {
    fn from(p: BinaryProb) -> Self {
        p.0
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index, value: values[index] }),
        None => Ok(()),
    }
}

pub(crate) fn check_same_len(p: &ProbVector, q: &ProbVector) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { left: p.len(), right: q.len() });
    }
    Ok(())
}

/// Lowest index among the maximal entries of a slice.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = j;
        }
    }
    best
}

/// Writes `softmax(temperature · scores)` into `out`. No validation.
pub fn softmax_into(scores: &[f64], temperature: f64, out: &mut [f64]) {
    let max = scores.iter().fold(f64::NEG_INFINITY, |m, &s| m.max(s));
    let mut sum = 0.0;
    for (o, &s) in out.iter_mut().zip(scores) {
        *o = exp(temperature * (s - max));
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

/// Writes `log softmax(temperature · scores)` into `out` and returns the
/// log-partition `ln Σ exp(temperature · s_k)`.
pub fn log_softmax_into(scores: &[f64], temperature: f64, out: &mut [f64]) -> f64 {
    let lse = math::log_sum_exp_iter(scores.iter().map(|&s| temperature * s));
    for (o, &s) in out.iter_mut().zip(scores) {
        *o = temperature * s - lse;
    }
    lse
}

/// `exp(λ·s_j) / Σ_k exp(λ·s_k)`, computed after subtracting the maximum.
pub fn softmax(scores: &ScoreVector, temperature: f64) -> Result<ProbVector> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidParameter { name: "temperature", value: temperature });
    }
    if scores.len() < 2 {
        return Err(Error::TooFewClasses(scores.len()));
    }
    let mut out = alloc::vec![0.0; scores.len()];
    softmax_into(scores.as_slice(), temperature, &mut out);
    ProbVector::new(out)
}

pub fn sigmoid(f: f64) -> Result<BinaryProb> {
    if !f.is_finite() {
        return Err(Error::NonFinite { index: 0, value: f });
    }
    Ok(BinaryProb(math::sigmoid(f)))
}

/// Shannon entropy in nats.
pub fn entropy(p: &ProbVector) -> f64 {
    -p.as_slice().iter().map(|&x| xlogx(x)).sum::<f64>()
}

pub fn binary_entropy(p: BinaryProb) -> f64 {
    -(xlogx(p.0) + xlogx(1.0 - p.0))
}

/// `-Σ p_j ln q_j`; `+∞` when `q` misses part of the support of `p`.
pub fn cross_entropy(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    check_same_len(p, q)?;
    let mut acc = 0.0;
    for (&pj, &qj) in p.as_slice().iter().zip(q.as_slice()) {
        if pj == 0.0 {
            continue;
        }
        if qj == 0.0 {
            return Ok(f64::INFINITY);
        }
        acc -= pj * ln(qj);
    }
    Ok(acc)
}

/// `Σ p_j ln(p_j / q_j)`; `+∞` on support mismatch.
pub fn kl(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    check_same_len(p, q)?;
    let mut acc = 0.0;
    for (&pj, &qj) in p.as_slice().iter().zip(q.as_slice()) {
        if pj == 0.0 {
            continue;
        }
        if qj == 0.0 {
            return Ok(f64::INFINITY);
        }
        acc += pj * (ln(pj) - ln(qj));
    }
    Ok(acc)
}

/// `KL(Unif ‖ p)`.
pub fn kl_from_uniform(p: &ProbVector) -> f64 {
    let u = ProbVector::uniform(p.len()).expect("ProbVector has K >= 2");
    kl(&u, p).expect("same length")
}

/// Draws from the symmetric Dirichlet(1) distribution on the `k`-simplex by
/// normalizing independent unit exponentials.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Result<ProbVector> {
    if k < 2 {
        return Err(Error::TooFewClasses(k));
    }
    let mut v: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let sum: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= sum);
    ProbVector::new(v)
}
