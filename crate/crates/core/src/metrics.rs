//! Retrieval and stability evaluation.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::prob::check_finite;
use crate::{Error, Result};

/// Fraction of queries whose matching document (document `i` for query `i`)
/// ranks in the top `k` of its row. Ties go to the lower document index.
/// Columns past the number of queries act as distractors.
pub fn recall_at_k(scores: &Matrix, k: usize) -> Result<f64> {
    let (n, m) = (scores.rows(), scores.cols());
    if n == 0 {
        return Err(Error::Empty("queries"));
    }
    if n > m {
        return Err(Error::DimensionMismatch { left: n, right: m });
    }
    if k == 0 || k > m {
        return Err(Error::InvalidParameter { name: "k", value: k as f64 });
    }
    check_finite(scores.as_slice())?;
    let hits = (0..n).filter(|&i| match_rank(scores.row(i), i) < k).count();
    Ok(hits as f64 / n as f64)
}

/// Zero-based rank of column `target` within `row`.
pub fn match_rank(row: &[f64], target: usize) -> usize {
    let s = row[target];
    row.iter().enumerate().filter(|&(j, &v)| v > s || (v == s && j < target)).count()
}

/// Precision–recall curve with its trapezoidal area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PRCurve {
    /// `(recall, precision)`, recall nondecreasing.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Sweeps a global threshold down through the distinct scores. The curve
/// opens at recall 0 with the precision of the first threshold, so a
/// perfect ranking integrates to exactly 1. Depends on the scores only
/// through their order.
pub fn pr_curve(scores: &[f64], matches: &[bool]) -> Result<PRCurve> {
    if scores.len() != matches.len() {
        return Err(Error::DimensionMismatch { left: scores.len(), right: matches.len() });
    }
    check_finite(scores)?;
    let positives = matches.iter().filter(|&&m| m).count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let total = positives as f64;
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut idx = 0;
    while idx < order.len() {
        let s = scores[order[idx]];
        while idx < order.len() && scores[order[idx]] == s {
            if matches[order[idx]] {
                tp += 1;
            } else {
                fp += 1;
            }
            idx += 1;
        }
        let precision = tp as f64 / (tp + fp) as f64;
        if points.is_empty() {
            points.push((0.0, precision));
        }
        points.push((tp as f64 / total, precision));
    }
    let auc = trapezoid(&points);
    Ok(PRCurve { points, auc })
}

/// PR curve over every query–document pair of a square score matrix, with
/// the diagonal as the matching pairs.
pub fn pairwise_pr_curve(scores: &Matrix) -> Result<PRCurve> {
    let n = scores.rows();
    let flags: Vec<bool> = (0..n).flat_map(|i| (0..scores.cols()).map(move |j| i == j)).collect();
    pr_curve(scores.as_slice(), &flags)
}

fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points.windows(2).map(|w| (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinSpec {
    /// Equal-width bins over `[min, max]` of the data.
    Uniform { bins: usize },
    /// Equal-width bins over a fixed range.
    Range { lo: f64, hi: f64, bins: usize },
    /// Explicit increasing edges.
    Edges(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Counts values per bin. Bins are half-open except the last; values outside
/// the edges land in the first or last bin so counts always sum to the
/// sample size. Constant data over `Uniform` gets a unit-width range centred
/// on the value.
pub fn histogram(values: &[f64], spec: &BinSpec) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::Empty("histogram values"));
    }
    check_finite(values)?;
    let edges = match spec {
        BinSpec::Uniform { bins } => {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let (lo, hi) = if lo == hi { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
            uniform_edges(lo, hi, *bins)?
        }
        BinSpec::Range { lo, hi, bins } => {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidParameter { name: "range", value: hi - lo });
            }
            uniform_edges(*lo, *hi, *bins)?
        }
        BinSpec::Edges(e) => {
            if e.len() < 2 || e.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidSize(alloc::format!("{} edges, need >= 2 increasing", e.len())));
            }
            check_finite(e)?;
            e.clone()
        }
    };
    let bins = edges.len() - 1;
    let mut counts = vec![0u64; bins];
    for &v in values {
        // first edge strictly greater than v, minus one
        let idx = edges.partition_point(|&e| e <= v).saturating_sub(1).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(Histogram { edges, counts })
}

fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::InvalidSize("zero bins".into()));
    }
    let w = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + w * i as f64).collect();
    edges.push(hi);
    Ok(edges)
}

/// Per-query sorted score curves and their percentile envelopes across
/// queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreProfile {
    /// One descending score curve per sampled query.
    pub curves: Vec<Vec<f64>>,
    /// 5th percentile across queries at each rank.
    pub p05: Vec<f64>,
    /// 95th percentile across queries at each rank.
    pub p95: Vec<f64>,
}

impl ScoreProfile {
    /// Mean over ranks of `p95 − p05`.
    pub fn mean_envelope_width(&self) -> f64 {
        let n = self.p05.len() as f64;
        self.p95.iter().zip(&self.p05).map(|(hi, lo)| hi - lo).sum::<f64>() / n
    }
}

/// Nearest-rank percentile of sorted data: the `⌈p/100·N⌉`-th smallest value.
pub fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    let n = sorted.len();
    let rank = libm::ceil(pct / 100.0 * n as f64) as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub fn score_distribution_profile(scores: &Matrix, queries: &[usize]) -> Result<ScoreProfile> {
    if queries.is_empty() || scores.cols() == 0 {
        return Err(Error::Empty("query sample"));
    }
    check_finite(scores.as_slice())?;
    let mut curves = Vec::with_capacity(queries.len());
    for &q in queries {
        if q >= scores.rows() {
            return Err(Error::IndexOutOfRange { index: q, len: scores.rows() });
        }
        let mut row = scores.row(q).to_vec();
        row.sort_by(|a, b| b.total_cmp(a));
        curves.push(row);
    }
    let m = scores.cols();
    let mut p05 = Vec::with_capacity(m);
    let mut p95 = Vec::with_capacity(m);
    let mut column = vec![0.0; curves.len()];
    for r in 0..m {
        for (c, curve) in column.iter_mut().zip(&curves) {
            *c = curve[r];
        }
        column.sort_by(f64::total_cmp);
        p05.push(nearest_rank(&column, 5.0));
        p95.push(nearest_rank(&column, 95.0));
    }
    Ok(ScoreProfile { curves, p05, p95 })
}
