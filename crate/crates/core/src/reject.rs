//! Binary classification with a reject option.
//!
//! A score `z = y·f(x)` costs 1 when confidently wrong (`z < −δ`), `d` when
//! it abstains (`|z| ≤ δ`) and 0 otherwise. [`convex_surrogate`] is the
//! piecewise-linear convex upper bound with slope `a` on the negative side,
//! and [`smooth_surrogate`] replaces its kinks with softplus terms of
//! sharpness `α`, converging to it pointwise as `α → ∞`.

use serde::{Deserialize, Serialize};

use crate::math::{exp, ln_1p, sigmoid};
use crate::prob::BinaryProb;
use crate::{Error, Result, ValueGrad};

/// Rejection cost `d`, abstention half-width `δ`, negative-side slope `a`
/// and smoothing sharpness `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectParams {
    d: f64,
    delta: f64,
    a: f64,
    alpha: f64,
}

impl RejectParams {
    /// Slope defaults to `a = (1 − d)/d`, the value that makes the convex
    /// surrogate's minimizer switch exactly at `η = d` and `η = 1 − d`.
    pub fn new(d: f64, delta: f64, alpha: f64) -> Result<Self> {
        if !(d > 0.0 && d < 0.5) {
            return Err(Error::InvalidParameter { name: "d", value: d });
        }
        Self::with_slope(d, delta, alpha, (1.0 - d) / d)
    }

    pub fn with_slope(d: f64, delta: f64, alpha: f64, a: f64) -> Result<Self> {
        if !(d > 0.0 && d < 0.5) {
            return Err(Error::InvalidParameter { name: "d", value: d });
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter { name: "delta", value: delta });
        }
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter { name: "alpha", value: alpha });
        }
        if !(a > 1.0 && a.is_finite()) {
            return Err(Error::InvalidParameter { name: "a", value: a });
        }
        Ok(Self { d, delta, a, alpha })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn slope(&self) -> f64 {
        self.a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Same parameters with a different sharpness.
    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::with_slope(self.d, self.delta, alpha, self.a)
    }
}

/// 1 for `z < −δ`, `d` for `|z| ≤ δ`, 0 otherwise.
pub fn reject_loss(z: f64, params: &RejectParams) -> f64 {
    if z < -params.delta {
        1.0
    } else if z <= params.delta {
        params.d
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RejectDecision {
    Negative,
    Reject,
    Positive,
}

impl RejectDecision {
    /// `−1`, `0` or `+1`.
    pub fn value(self) -> i8 {
        match self {
            Self::Negative => -1,
            Self::Reject => 0,
            Self::Positive => 1,
        }
    }
}

/// Bayes-optimal decision given `η = P(y = 1 | x)`.
pub fn bayes_reject(eta: BinaryProb, params: &RejectParams) -> RejectDecision {
    let eta = eta.get();
    if eta > 1.0 - params.d {
        RejectDecision::Positive
    } else if eta >= params.d {
        RejectDecision::Reject
    } else {
        RejectDecision::Negative
    }
}

/// `1 − a·z` below 0, `1 − z` on `[0, 1)`, 0 from 1 on.
pub fn convex_surrogate(z: f64, params: &RejectParams) -> f64 {
    if z < 0.0 {
        1.0 - params.a * z
    } else if z < 1.0 {
        1.0 - z
    } else {
        0.0
    }
}

/// `(1/α)·[(a − 1)·ln(1 + e^{αz}) + ln(1 + e^{α − αz})] − (a − 1)·z` and its
/// derivative.
///
/// Evaluated as `φ_d(z) + (1/α)·[(a − 1)·ln(1 + e^{−α|z|}) + ln(1 + e^{−α|1 − z|})]`,
/// which is the same expression with the linear parts cancelled exactly.
pub fn smooth_surrogate(z: f64, params: &RejectParams) -> ValueGrad {
    let (a, alpha) = (params.a, params.alpha);
    let gap = ((a - 1.0) * ln_1p(exp(-alpha * z.abs())) + ln_1p(exp(-alpha * (1.0 - z).abs()))) / alpha;
    let value = (a - 1.0) * (-z).max(0.0) + (1.0 - z).max(0.0) + gap;
    let grad = -(a - 1.0) * sigmoid(-alpha * z) - sigmoid(alpha * (1.0 - z));
    ValueGrad { value, grad }
}

/// `F̄(v) = ((1 − a)·σ(αv) − σ(αv + α)) / ((1 − a) − σ(αv + α) − σ(−αv + α))`.
///
/// This maps a score back to the class probability for which it is the
/// minimizer of the expected smooth surrogate, so it is increasing from 0 to 1.
pub fn link(v: f64, params: &RejectParams) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite { index: 0, value: v });
    }
    let (a, alpha) = (params.a, params.alpha);
    let s_plus = sigmoid(alpha * v + alpha);
    let num = (1.0 - a) * sigmoid(alpha * v) - s_plus;
    let den = (1.0 - a) - s_plus - sigmoid(-alpha * v + alpha);
    if den.abs() < 1e-12 {
        return Err(Error::SingularLink(v));
    }
    Ok(num / den)
}

/// Search interval and resolution for [`bayes_optimal_score`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub tol: f64,
}

impl Default for GridSearch {
    fn default() -> Self {
        Self { lo: -3.0, hi: 3.0, points: 601, tol: 1e-6 }
    }
}

/// `argmin_z η·φ̄(z) + (1 − η)·φ̄(−z)`: coarse grid scan, then ternary
/// search inside the bracket around the best grid point. The objective is
/// strictly convex because φ̄ is.
pub fn bayes_optimal_score(eta: BinaryProb, params: &RejectParams, search: &GridSearch) -> Result<f64> {
    let eta = eta.get();
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::ProbabilityOutOfRange(eta));
    }
    if !(search.lo < search.hi) || search.points < 3 || !(search.tol > 0.0) {
        return Err(Error::InvalidParameter { name: "search", value: search.hi - search.lo });
    }
    let objective = |z: f64| eta * smooth_surrogate(z, params).value + (1.0 - eta) * smooth_surrogate(-z, params).value;
    let step = (search.hi - search.lo) / (search.points - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..search.points {
        let z = search.lo + step * i as f64;
        let v = objective(z);
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective(z));
        }
        if v < best.1 {
            best = (i, v);
        }
    }
    let mut lo = search.lo + step * best.0.saturating_sub(1) as f64;
    let mut hi = search.lo + step * (best.0 + 1).min(search.points - 1) as f64;
    while hi - lo > search.tol {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if objective(m1) < objective(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Empirical `P(y·f < −δ) + d·P(|y·f| ≤ δ)` for scores `f` and labels `±1`.
pub fn reject_risk(scores: &[f64], labels: &[i8], params: &RejectParams) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Empty("sample"));
    }
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { left: scores.len(), right: labels.len() });
    }
    let mut total = 0.0;
    for (&f, &y) in scores.iter().zip(labels) {
        if y != 1 && y != -1 {
            return Err(Error::InvalidParameter { name: "label", value: f64::from(y) });
        }
        total += reject_loss(f64::from(y) * f, params);
    }
    Ok(total / scores.len() as f64)
}
