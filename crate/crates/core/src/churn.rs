//! Hard and soft churn between two models, prediction margins, and
//! executable checkers for the inequalities that tie churn to error rates,
//! cross-entropy, margins and Hellinger/total-variation distances.
//!
//! Checkers work on empirical samples. Each inequality holds per sample, so
//! the per-sample means inherit it without any concentration argument.
//! A check counts as violated only when its slack drops below
//! `-`[`BOUND_TOL`].

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::divergence::{collision_unchecked, hellinger_sq_unchecked, l1_unchecked};
use crate::math::{ln, xlogx};
use crate::prob::{entropy, random_simplex, ProbVector};
use crate::{Error, Result};

/// Numerical slack allowed before an inequality counts as violated.
pub const BOUND_TOL: f64 = 1e-12;

/// Predicted label and the gap between the top probability and the runner-up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionMargin {
    pub label: usize,
    pub margin: f64,
}

/// Label is the lowest index among the maxima, so ties give a zero margin.
pub fn margin(p: &ProbVector) -> PredictionMargin {
    let label = p.argmax();
    let top = p.get(label);
    let runner_up =
        p.as_slice().iter().enumerate().filter(|&(j, _)| j != label).fold(f64::NEG_INFINITY, |m, (_, &x)| m.max(x));
    PredictionMargin { label, margin: top - runner_up }
}

/// Predictions of two models on the same inputs, with optional true labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedPredictions {
    model1: Vec<ProbVector>,
    model2: Vec<ProbVector>,
    labels: Option<Vec<usize>>,
}

impl PairedPredictions {
    pub fn new(model1: Vec<ProbVector>, model2: Vec<ProbVector>, labels: Option<Vec<usize>>) -> Result<Self> {
        if model1.len() != model2.len() {
            return Err(Error::DimensionMismatch { left: model1.len(), right: model2.len() });
        }
        if let Some(k) = model1.first().map(ProbVector::len) {
            for p in model1.iter().chain(&model2) {
                if p.len() != k {
                    return Err(Error::DimensionMismatch { left: k, right: p.len() });
                }
            }
            if let Some(ls) = &labels {
                if ls.len() != model1.len() {
                    return Err(Error::DimensionMismatch { left: model1.len(), right: ls.len() });
                }
                if let Some(&bad) = ls.iter().find(|&&y| y >= k) {
                    return Err(Error::IndexOutOfRange { index: bad, len: k });
                }
            }
        } else if labels.as_ref().is_some_and(|l| !l.is_empty()) {
            return Err(Error::DimensionMismatch { left: 0, right: labels.as_ref().map_or(0, Vec::len) });
        }
        Ok(Self { model1, model2, labels })
    }

    /// `n` pairs on the `k`-simplex: `p` is Dirichlet(1) and `q` is a random
    /// convex mix of `p` and an independent Dirichlet(1) draw, so pairs range
    /// from identical to independent. Labels are uniform when requested.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, labeled: bool) -> Result<Self> {
        let mut m1 = Vec::with_capacity(n);
        let mut m2 = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(if labeled { n } else { 0 });
        for _ in 0..n {
            let p = random_simplex(rng, k)?;
            let r = random_simplex(rng, k)?;
            let t: f64 = rng.random();
            let q: Vec<f64> = p.as_slice().iter().zip(r.as_slice()).map(|(a, b)| (1.0 - t) * a + t * b).collect();
            m1.push(p);
            m2.push(ProbVector::new(q)?);
            if labeled {
                labels.push(rng.random_range(0..k));
            }
        }
        Self::new(m1, m2, labeled.then_some(labels))
    }

    pub fn len(&self) -> usize {
        self.model1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.model1.is_empty()
    }

    pub fn model1(&self) -> &[ProbVector] {
        &self.model1
    }

    pub fn model2(&self) -> &[ProbVector] {
        &self.model2
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// The same data with the two models exchanged.
    pub fn swapped(&self) -> Self {
        Self { model1: self.model2.clone(), model2: self.model1.clone(), labels: self.labels.clone() }
    }

    fn pairs(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.model1.iter().zip(&self.model2).map(|(p, q)| (p.as_slice(), q.as_slice()))
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Empty("paired predictions"));
        }
        Ok(())
    }

    fn require_labels(&self) -> Result<&[usize]> {
        self.labels.as_deref().ok_or(Error::MissingLabels)
    }
}

/// Fraction of inputs on which the two argmax labels differ.
pub fn hard_churn(pp: &PairedPredictions) -> Result<f64> {
    pp.require_nonempty()?;
    let flips = pp.model1.iter().zip(&pp.model2).filter(|(p, q)| p.argmax() != q.argmax()).count();
    Ok(flips as f64 / pp.len() as f64)
}

/// `1 − mean Σ_j p_j q_j`: churn when each model samples its label from its
/// predicted distribution.
pub fn soft_churn(pp: &PairedPredictions) -> Result<f64> {
    pp.require_nonempty()?;
    let total: f64 = pp.pairs().map(|(p, q)| collision_unchecked(p, q)).sum();
    Ok(1.0 - total / pp.len() as f64)
}

/// `mean −ln Σ_j p_j q_j`; `+∞` as soon as one pair has disjoint support.
pub fn log_collision_proxy(pp: &PairedPredictions) -> Result<f64> {
    pp.require_nonempty()?;
    let mut total = 0.0;
    for (p, q) in pp.pairs() {
        let c = collision_unchecked(p, q);
        if c <= 0.0 {
            return Ok(f64::INFINITY);
        }
        total -= ln(c);
    }
    Ok(total / pp.len() as f64)
}

/// Fraction of predictions whose argmax differs from the label.
pub fn error_rate(preds: &[ProbVector], labels: &[usize]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    if preds.len() != labels.len() {
        return Err(Error::DimensionMismatch { left: preds.len(), right: labels.len() });
    }
    let wrong = preds.iter().zip(labels).filter(|(p, &y)| p.argmax() != y).count();
    Ok(wrong as f64 / preds.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChurnErrReport {
    pub samples: usize,
    pub churn: f64,
    pub err1: f64,
    pub err2: f64,
    /// `err1 + err2 − churn`.
    pub slack: f64,
    pub holds: bool,
}

/// Churn never exceeds the sum of the two error rates.
pub fn check_churn_err_bound(pp: &PairedPredictions) -> Result<ChurnErrReport> {
    let labels = pp.require_labels()?;
    let churn = hard_churn(pp)?;
    let err1 = error_rate(&pp.model1, labels)?;
    let err2 = error_rate(&pp.model2, labels)?;
    let slack = err1 + err2 - churn;
    Ok(ChurnErrReport { samples: pp.len(), churn, err1, err2, slack, holds: slack >= -BOUND_TOL })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlProxyReport {
    pub samples: usize,
    /// Samples where `−ln Σ p q` exceeds either cross-entropy.
    pub violations: usize,
    /// Smallest per-sample slack over both inequalities.
    pub min_slack: f64,
    pub mean_neg_log_collision: f64,
    /// `mean H(model1, model2)`.
    pub mean_cross_entropy_12: f64,
    /// `mean H(model2, model1)`.
    pub mean_cross_entropy_21: f64,
    pub holds: bool,
}

/// Jensen bound: `−ln Σ_j p_j q_j ≤ H(p, q)` and `≤ H(q, p)` per sample.
pub fn check_kl_proxy_bound(pp: &PairedPredictions) -> Result<KlProxyReport> {
    pp.require_nonempty()?;
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    let (mut sum_lhs, mut sum_12, mut sum_21) = (0.0, 0.0, 0.0);
    for (p, q) in pp.pairs() {
        let c = collision_unchecked(p, q);
        let lhs = if c > 0.0 { -ln(c) } else { f64::INFINITY };
        let h12 = cross_entropy_slice(p, q);
        let h21 = cross_entropy_slice(q, p);
        sum_lhs += lhs;
        sum_12 += h12;
        sum_21 += h21;
        for rhs in [h12, h21] {
            // an infinite right side bounds anything, including an infinite left side
            let slack = if rhs == f64::INFINITY { f64::INFINITY } else { rhs - lhs };
            min_slack = min_slack.min(slack);
            if slack < -BOUND_TOL {
                violations += 1;
            }
        }
    }
    let n = pp.len() as f64;
    Ok(KlProxyReport {
        samples: pp.len(),
        violations,
        min_slack,
        mean_neg_log_collision: sum_lhs / n,
        mean_cross_entropy_12: sum_12 / n,
        mean_cross_entropy_21: sum_21 / n,
        holds: violations == 0,
    })
}

fn cross_entropy_slice(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&pj, &qj) in p.iter().zip(q) {
        if pj > 0.0 {
            if qj == 0.0 {
                return f64::INFINITY;
            }
            acc -= pj * ln(qj);
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HellingerReport {
    pub samples: usize,
    pub soft_churn: f64,
    pub mean_hellinger_sq: f64,
    /// `½ · mean D_TV²`.
    pub half_mean_tv_sq: f64,
    /// `1 − mean Σ_j p_j² + mean Σ_j |p_j − q_j|`, with `p` from model 1.
    pub upper_bound: f64,
    /// Per-sample violations of any link in the chain.
    pub pointwise_violations: usize,
    pub min_slack: f64,
    pub holds: bool,
}

/// Checks `soft churn ≥ mean H² ≥ ½·mean D_TV²` and the Hölder upper bound
/// `soft churn ≤ 1 − mean pᵀp + mean ‖p − q‖₁`, both per sample and on the
/// aggregates.
pub fn check_hellinger_sandwich(pp: &PairedPredictions) -> Result<HellingerReport> {
    pp.require_nonempty()?;
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    let (mut sum_soft, mut sum_h2, mut sum_tv2, mut sum_self, mut sum_l1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (p, q) in pp.pairs() {
        let soft = 1.0 - collision_unchecked(p, q);
        let h2 = hellinger_sq_unchecked(p, q);
        let l1 = l1_unchecked(p, q);
        let tv = 0.5 * l1;
        let self_collision = collision_unchecked(p, p);
        let upper = 1.0 - self_collision + l1;
        let mut any = false;
        for slack in [soft - h2, h2 - 0.5 * tv * tv, upper - soft] {
            min_slack = min_slack.min(slack);
            any |= slack < -BOUND_TOL;
        }
        violations += usize::from(any);
        sum_soft += soft;
        sum_h2 += h2;
        sum_tv2 += tv * tv;
        sum_self += self_collision;
        sum_l1 += l1;
    }
    let n = pp.len() as f64;
    let soft_churn = sum_soft / n;
    let mean_hellinger_sq = sum_h2 / n;
    let half_mean_tv_sq = 0.5 * sum_tv2 / n;
    let upper_bound = 1.0 - sum_self / n + sum_l1 / n;
    let aggregate_ok = soft_churn - mean_hellinger_sq >= -BOUND_TOL
        && mean_hellinger_sq - half_mean_tv_sq >= -BOUND_TOL
        && upper_bound - soft_churn >= -BOUND_TOL;
    Ok(HellingerReport {
        samples: pp.len(),
        soft_churn,
        mean_hellinger_sq,
        half_mean_tv_sq,
        upper_bound,
        pointwise_violations: violations,
        min_slack,
        holds: violations == 0 && aggregate_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub samples: usize,
    pub churn_events: usize,
    /// Churn events with `‖p − q‖₁ < min(γ_p, γ_q)`.
    pub violations: usize,
    /// Smallest `‖p − q‖₁ − min(γ_p, γ_q)` over churn events.
    pub min_slack: f64,
    pub churn: f64,
    /// Frequency of `‖p − q‖₁ ≥ min(γ_p, γ_q)` over all samples.
    pub margin_event_rate: f64,
    pub holds: bool,
}

/// Whenever the two argmax labels differ, the L1 distance between the
/// predictions is at least the smaller of the two margins; so churn is at
/// most the frequency of that event.
pub fn check_margin_event(pp: &PairedPredictions) -> Result<MarginReport> {
    pp.require_nonempty()?;
    let (mut events, mut violations, mut covered) = (0, 0, 0);
    let mut min_slack = f64::INFINITY;
    for (p, q) in pp.model1.iter().zip(&pp.model2) {
        let mp = margin(p);
        let mq = margin(q);
        let slack = l1_unchecked(p.as_slice(), q.as_slice()) - mp.margin.min(mq.margin);
        if slack >= -BOUND_TOL {
            covered += 1;
        }
        if mp.label != mq.label {
            events += 1;
            min_slack = min_slack.min(slack);
            if slack < -BOUND_TOL {
                violations += 1;
            }
        }
    }
    let n = pp.len() as f64;
    let churn = events as f64 / n;
    let margin_event_rate = covered as f64 / n;
    Ok(MarginReport {
        samples: pp.len(),
        churn_events: events,
        violations,
        min_slack,
        churn,
        margin_event_rate,
        holds: violations == 0 && churn <= margin_event_rate,
    })
}

/// `g(γ) = H_bin((1 + γ)/2)`: entropy of a binary prediction with margin γ.
pub fn confidence_entropy(gamma: f64) -> f64 {
    let p = 0.5 * (1.0 + gamma);
    -(xlogx(p) + xlogx(1.0 - p))
}

/// `g'(γ) = ½·ln((1 − γ)/(1 + γ))`, negative on `(0, 1)`.
pub fn confidence_entropy_slope(gamma: f64) -> f64 {
    0.5 * ln((1.0 - gamma) / (1.0 + gamma))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyMinimizerReport {
    pub candidates: usize,
    pub alpha: f64,
    /// Minimizer of the mean log-loss.
    pub base_index: usize,
    /// Minimizer of the mean log-loss plus `α ×` mean entropy.
    pub entropic_index: usize,
    pub base_mean_entropy: f64,
    pub entropic_mean_entropy: f64,
    pub holds: bool,
}

/// Over a finite set of candidate predictors (each a table of predictions on
/// the same labelled data), the minimizer of the entropy-penalized log-loss
/// has mean entropy no larger than the minimizer of the plain log-loss.
///
/// Objective values within a relative `1e-12` are ties and go to the lower
/// mean entropy, then to the lower index.
pub fn entropy_minimizer_check(
    candidates: &[Vec<ProbVector>],
    labels: &[usize],
    alpha: f64,
) -> Result<EntropyMinimizerReport> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidate set"));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter { name: "alpha", value: alpha });
    }
    if labels.is_empty() {
        return Err(Error::Empty("labels"));
    }
    let mut log_loss = Vec::with_capacity(candidates.len());
    let mut mean_entropy = Vec::with_capacity(candidates.len());
    for table in candidates {
        if table.len() != labels.len() {
            return Err(Error::DimensionMismatch { left: labels.len(), right: table.len() });
        }
        let mut ll = 0.0;
        let mut h = 0.0;
        for (p, &y) in table.iter().zip(labels) {
            if y >= p.len() {
                return Err(Error::IndexOutOfRange { index: y, len: p.len() });
            }
            let py = p.get(y);
            ll += if py > 0.0 { -ln(py) } else { f64::INFINITY };
            h += entropy(p);
        }
        let n = labels.len() as f64;
        log_loss.push(ll / n);
        mean_entropy.push(h / n);
    }
    let base = argmin_with_entropy_ties(&log_loss, &mean_entropy);
    let regularized: Vec<f64> = log_loss.iter().zip(&mean_entropy).map(|(l, h)| l + alpha * h).collect();
    let entropic = argmin_with_entropy_ties(&regularized, &mean_entropy);
    Ok(EntropyMinimizerReport {
        candidates: candidates.len(),
        alpha,
        base_index: base,
        entropic_index: entropic,
        base_mean_entropy: mean_entropy[base],
        entropic_mean_entropy: mean_entropy[entropic],
        holds: mean_entropy[entropic] <= mean_entropy[base] + BOUND_TOL,
    })
}

fn argmin_with_entropy_ties(objective: &[f64], entropy: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..objective.len() {
        let (a, b) = (objective[i], objective[best]);
        let tie = a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        if (!tie && a < b) || (tie && entropy[i] < entropy[best]) {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn margin_examples() {
        assert_eq!(margin(&pv(&[0.7, 0.2, 0.1])).label, 0);
        assert_abs_diff_eq!(margin(&pv(&[0.7, 0.2, 0.1])).margin, 0.5, epsilon = 1e-15);
        assert_eq!(margin(&ProbVector::uniform(3).unwrap()), PredictionMargin { label: 0, margin: 0.0 });
        let m = margin(&pv(&[0.2, 0.8]));
        assert_eq!(m.label, 1);
        assert_abs_diff_eq!(m.margin, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn hard_churn_counts_flips() {
        let a = pv(&[0.9, 0.1]);
        let b = pv(&[0.2, 0.8]);
        let m1 = vec![a.clone(); 10];
        let mut m2 = m1.clone();
        assert_eq!(hard_churn(&PairedPredictions::new(m1.clone(), m2.clone(), None).unwrap()).unwrap(), 0.0);
        for p in m2.iter_mut().take(3) {
            *p = b.clone();
        }
        let pp = PairedPredictions::new(m1, m2, None).unwrap();
        assert_abs_diff_eq!(hard_churn(&pp).unwrap(), 0.3, epsilon = 1e-15);
        assert_eq!(hard_churn(&pp.swapped()).unwrap(), hard_churn(&pp).unwrap());
        let all = PairedPredictions::new(vec![a; 4], vec![b; 4], None).unwrap();
        assert_eq!(hard_churn(&all).unwrap(), 1.0);
        let empty = PairedPredictions::new(vec![], vec![], None).unwrap();
        assert!(matches!(hard_churn(&empty), Err(Error::Empty(_))));
        assert!(soft_churn(&empty).is_err());
    }

    #[test]
    fn construction_validates_shapes() {
        let a = pv(&[0.5, 0.5]);
        assert!(PairedPredictions::new(vec![a.clone()], vec![], None).is_err());
        assert!(PairedPredictions::new(vec![a.clone()], vec![ProbVector::uniform(3).unwrap()], None).is_err());
        assert!(PairedPredictions::new(vec![a.clone()], vec![a.clone()], Some(vec![2])).is_err());
        assert!(PairedPredictions::new(vec![a.clone()], vec![a], Some(vec![0, 1])).is_err());
    }

    #[test]
    fn soft_churn_and_proxy_examples() {
        let e = ProbVector::one_hot(3, 1).unwrap();
        let same = PairedPredictions::new(vec![e.clone()], vec![e], None).unwrap();
        assert_eq!(soft_churn(&same).unwrap(), 0.0);
        assert_eq!(log_collision_proxy(&same).unwrap(), 0.0);
        let u = ProbVector::uniform(4).unwrap();
        let uu = PairedPredictions::new(vec![u.clone()], vec![u], None).unwrap();
        assert_abs_diff_eq!(soft_churn(&uu).unwrap(), 0.75, epsilon = 1e-15);
        let u2 = ProbVector::uniform(2).unwrap();
        let uu2 = PairedPredictions::new(vec![u2.clone()], vec![u2], None).unwrap();
        assert_abs_diff_eq!(log_collision_proxy(&uu2).unwrap(), crate::math::LN_2, epsilon = 1e-15);
        let pq = PairedPredictions::new(vec![pv(&[0.5, 0.5])], vec![pv(&[0.9, 0.1])], None).unwrap();
        assert_abs_diff_eq!(soft_churn(&pq).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(log_collision_proxy(&pq).unwrap(), crate::math::LN_2, epsilon = 1e-15);
        let disjoint = PairedPredictions::new(vec![pv(&[1.0, 0.0])], vec![pv(&[0.0, 1.0])], None).unwrap();
        assert_eq!(log_collision_proxy(&disjoint).unwrap(), f64::INFINITY);
    }

    #[test]
    fn error_rate_examples() {
        let a = pv(&[0.9, 0.1]);
        let preds = vec![a.clone(); 8];
        assert_eq!(error_rate(&preds, &[0; 8]).unwrap(), 0.0);
        assert_eq!(error_rate(&preds, &[1; 8]).unwrap(), 1.0);
        assert_eq!(error_rate(&preds, &[0, 0, 1, 0, 0, 1, 0, 0]).unwrap(), 0.25);
        let pp = PairedPredictions::new(preds.clone(), preds, None).unwrap();
        assert_eq!(check_churn_err_bound(&pp), Err(Error::MissingLabels));
    }

    #[test]
    fn churn_err_examples() {
        let a = pv(&[0.9, 0.1]);
        let perfect = PairedPredictions::new(vec![a.clone(); 10], vec![a.clone(); 10], Some(vec![0; 10])).unwrap();
        let r = check_churn_err_bound(&perfect).unwrap();
        assert!(r.holds && r.churn == 0.0 && r.err1 == 0.0);
        let labels = vec![0, 0, 0, 1, 1, 1, 0, 0, 0, 0];
        let noisy = PairedPredictions::new(vec![a.clone(); 10], vec![a; 10], Some(labels)).unwrap();
        let r = check_churn_err_bound(&noisy).unwrap();
        assert!(r.holds);
        assert_eq!(r.churn, 0.0);
        assert_abs_diff_eq!(r.err1 + r.err2, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn kl_proxy_examples() {
        let u = ProbVector::uniform(2).unwrap();
        let r = check_kl_proxy_bound(&PairedPredictions::new(vec![u.clone()], vec![u], None).unwrap()).unwrap();
        assert!(r.holds);
        assert_abs_diff_eq!(r.min_slack, 0.0, epsilon = 1e-15);
        let pq = PairedPredictions::new(vec![pv(&[0.5, 0.5])], vec![pv(&[0.9, 0.1])], None).unwrap();
        let r = check_kl_proxy_bound(&pq).unwrap();
        assert!(r.holds);
        assert_abs_diff_eq!(r.mean_neg_log_collision, core::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(r.mean_cross_entropy_12, 1.203_972_804_325_936, epsilon = 1e-12);
    }

    #[test]
    fn hellinger_sandwich_examples() {
        // identical models: the upper bound is tight
        let ps = vec![pv(&[0.7, 0.2, 0.1]), pv(&[0.3, 0.3, 0.4])];
        let r = check_hellinger_sandwich(&PairedPredictions::new(ps.clone(), ps.clone(), None).unwrap()).unwrap();
        let mean_self = (0.49 + 0.04 + 0.01 + 0.09 + 0.09 + 0.16) / 2.0;
        assert!(r.holds);
        assert_abs_diff_eq!(r.soft_churn, 1.0 - mean_self, epsilon = 1e-15);
        assert_abs_diff_eq!(r.upper_bound, r.soft_churn, epsilon = 1e-15);
        let d = PairedPredictions::new(vec![pv(&[1.0, 0.0])], vec![pv(&[0.0, 1.0])], None).unwrap();
        let r = check_hellinger_sandwich(&d).unwrap();
        assert!(r.holds);
        assert_eq!((r.soft_churn, r.mean_hellinger_sq, r.half_mean_tv_sq), (1.0, 1.0, 0.5));
    }

    #[test]
    fn margin_event_examples() {
        let ps = vec![pv(&[0.6, 0.4])];
        let r = check_margin_event(&PairedPredictions::new(ps.clone(), ps, None).unwrap()).unwrap();
        assert!(r.holds && r.churn_events == 0);
        let pq = PairedPredictions::new(vec![pv(&[0.6, 0.4])], vec![pv(&[0.4, 0.6])], None).unwrap();
        let r = check_margin_event(&pq).unwrap();
        assert!(r.holds);
        assert_eq!(r.churn_events, 1);
        // l1 = 0.4, min margin = 0.2
        assert_abs_diff_eq!(r.min_slack, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn confidence_entropy_is_decreasing() {
        assert_abs_diff_eq!(confidence_entropy(0.0), crate::math::LN_2, epsilon = 1e-15);
        assert_eq!(confidence_entropy(1.0), 0.0);
        let mut prev = confidence_entropy(0.0);
        for i in 1..=1000 {
            let g = confidence_entropy(i as f64 * 1e-3);
            assert!(g < prev);
            prev = g;
        }
    }

    #[test]
    fn entropy_minimizer_examples() {
        let labels = vec![0, 1];
        let sharp = vec![pv(&[0.9, 0.1]), pv(&[0.1, 0.9])];
        let flat = vec![pv(&[0.6, 0.4]), pv(&[0.4, 0.6])];
        let r = entropy_minimizer_check(core::slice::from_ref(&sharp), &labels, 0.3).unwrap();
        assert!(r.holds && r.base_index == 0 && r.entropic_index == 0);
        assert_eq!(r.base_mean_entropy, r.entropic_mean_entropy);
        let r = entropy_minimizer_check(&[flat, sharp], &labels, 0.3).unwrap();
        assert_eq!((r.base_index, r.entropic_index), (1, 1));
        assert!(r.holds);
        assert!(entropy_minimizer_check(&[], &labels, 0.3).is_err());
    }
}
