//! Churn sweeps over seed pairs and retrieval comparisons across losses.
//!
//! Both drivers are split into independent jobs so a caller can run them on
//! any number of threads and merge the outcomes by job index.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::data::{holdout_split, BlobSpec, Dataset, PairedDataset, PairedSpec};
use super::{cosine_matrix, forward, forward_probs, train_classifier, train_dual_encoder, LossFamily, TrainConfig};
use crate::churn::PairedPredictions;
use crate::churn::{check_churn_err_bound, check_hellinger_sandwich, error_rate, hard_churn, soft_churn};
use crate::divergence::{l1_unchecked, lp_max, lp_unchecked};
use crate::metrics::{histogram, pairwise_pr_curve, recall_at_k, score_distribution_profile, BinSpec, Histogram};
use crate::reg_loss::{RegKind, RegParams};
use crate::xex::XexVariant;
use crate::{Error, Result};

fn default_holdout() -> f64 {
    0.2
}

fn default_bins() -> usize {
    20
}

fn default_kind() -> RegKind {
    RegKind::KlUniform
}

fn default_profile_queries() -> usize {
    100
}

/// Sample mean and sample standard deviation (zero for a single value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64)
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Which seeds differ between the two models of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSeeding {
    pub vary_init: bool,
    pub vary_shuffle: bool,
}

impl Default for PairSeeding {
    fn default() -> Self {
        Self { vary_init: true, vary_shuffle: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChurnSpec {
    /// Its `reg` field is replaced by `reg_kind` at each swept α.
    pub base: TrainConfig,
    pub data: BlobSpec,
    pub split_seed: u64,
    #[serde(default = "default_holdout")]
    pub holdout_fraction: f64,
    #[serde(default = "default_kind")]
    pub reg_kind: RegKind,
    pub alphas: Vec<f64>,
    pub pair_count: usize,
    #[serde(default)]
    pub seeding: PairSeeding,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChurnJob {
    pub alpha_index: usize,
    pub pair_id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSeeds {
    pub init: [u64; 2],
    pub shuffle: [u64; 2],
}

/// Train and holdout splits shared by every job of an experiment.
#[derive(Debug, Clone)]
pub struct ChurnData {
    pub train: Dataset,
    pub holdout: Dataset,
}

impl ChurnSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.pair_count == 0 {
            return Err(Error::InvalidSize("pair_count must be at least 1".into()));
        }
        if self.alphas.is_empty() {
            return Err(Error::Empty("alphas"));
        }
        if self.histogram_bins == 0 {
            return Err(Error::InvalidSize("histogram_bins must be positive".into()));
        }
        if self.base.loss != LossFamily::Classification {
            return Err(Error::InvalidSize("churn experiments train classifiers".into()));
        }
        for &a in &self.alphas {
            RegParams::new(self.reg_kind, a)?;
        }
        Ok(())
    }

    pub fn prepare(&self) -> Result<ChurnData> {
        self.validate()?;
        let full = self.data.generate()?;
        let (train, test) = holdout_split(self.split_seed, full.len(), self.holdout_fraction)?;
        Ok(ChurnData { train: full.subset(&train), holdout: full.subset(&test) })
    }

    /// Jobs in output order: α-major, then pair id.
    pub fn jobs(&self) -> Vec<ChurnJob> {
        (0..self.alphas.len())
            .flat_map(|alpha_index| (0..self.pair_count).map(move |pair_id| ChurnJob { alpha_index, pair_id }))
            .collect()
    }

    /// Pair `p` uses seeds `base + 2p` and, where varied, `base + 2p + 1`.
    /// The same seeds are reused at every α.
    pub fn pair_seeds(&self, pair_id: usize) -> PairSeeds {
        let off = 2 * pair_id as u64;
        let pick = |base: u64, vary: bool| {
            let a = base.wrapping_add(off);
            [a, if vary { a.wrapping_add(1) } else { a }]
        };
        PairSeeds {
            init: pick(self.base.seed_init, self.seeding.vary_init),
            shuffle: pick(self.base.seed_shuffle, self.seeding.vary_shuffle),
        }
    }
}

/// How the two models of a pair fare on each holdout example.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityCounts {
    pub both_correct: u64,
    pub both_wrong_same: u64,
    pub one_correct: u64,
    pub both_wrong_different: u64,
}

impl StabilityCounts {
    fn add(&mut self, other: &Self) {
        self.both_correct += other.both_correct;
        self.both_wrong_same += other.both_wrong_same;
        self.one_correct += other.one_correct;
        self.both_wrong_different += other.both_wrong_different;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChurnPairResult {
    pub alpha: f64,
    pub pair_id: usize,
    pub seeds: PairSeeds,
    pub hard_churn: f64,
    pub soft_churn: f64,
    pub l1_mean: f64,
    pub l1norm_mean: f64,
    pub l4_mean: f64,
    pub l05norm_mean: f64,
    pub err1: f64,
    pub err2: f64,
    pub stability: StabilityCounts,
    pub churn_err_bound_holds: bool,
    pub hellinger_bound_holds: bool,
    pub final_train_loss: [f64; 2],
}

/// Per-example values pooled into histograms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairSamples {
    /// Every raw score of both models on the holdout set.
    pub logits: Vec<f64>,
    pub l1: Vec<f64>,
    pub l05norm: Vec<f64>,
}

pub fn run_churn_pair(spec: &ChurnSpec, data: &ChurnData, job: ChurnJob) -> Result<(ChurnPairResult, PairSamples)> {
    let alpha = *spec
        .alphas
        .get(job.alpha_index)
        .ok_or(Error::IndexOutOfRange { index: job.alpha_index, len: spec.alphas.len() })?;
    let seeds = spec.pair_seeds(job.pair_id);
    let reg = RegParams::new(spec.reg_kind, alpha)?;
    let mut models = Vec::with_capacity(2);
    for m in 0..2 {
        let cfg = TrainConfig { seed_init: seeds.init[m], seed_shuffle: seeds.shuffle[m], reg, ..spec.base.clone() };
        models.push(train_classifier(&cfg, &data.train)?);
    }
    let x = &data.holdout.inputs;
    let labels = &data.holdout.labels;
    let t = spec.base.temperature;
    let p1 = forward_probs(&models[0].params, x, t)?;
    let p2 = forward_probs(&models[1].params, x, t)?;

    let mut samples = PairSamples::default();
    for m in &models {
        samples.logits.extend_from_slice(forward(&m.params, x)?.as_slice());
    }
    let n = labels.len() as f64;
    let (mut l1s, mut l4s, mut l05s) = (0.0, 0.0, 0.0);
    let mut stability = StabilityCounts::default();
    for ((p, q), &y) in p1.iter().zip(&p2).zip(labels) {
        let (a, b) = (p.as_slice(), q.as_slice());
        let l1 = l1_unchecked(a, b);
        let l05 = lp_unchecked(a, b, 0.5) / lp_max(0.5);
        l1s += l1;
        l4s += lp_unchecked(a, b, 4.0);
        l05s += l05;
        samples.l1.push(l1);
        samples.l05norm.push(l05);
        let (c1, c2) = (p.argmax(), q.argmax());
        match (c1 == y, c2 == y) {
            (true, true) => stability.both_correct += 1,
            (false, false) if c1 == c2 => stability.both_wrong_same += 1,
            (false, false) => stability.both_wrong_different += 1,
            _ => stability.one_correct += 1,
        }
    }
    let err1 = error_rate(&p1, labels)?;
    let err2 = error_rate(&p2, labels)?;
    let pp = PairedPredictions::new(p1, p2, Some(labels.clone()))?;
    let result = ChurnPairResult {
        alpha,
        pair_id: job.pair_id,
        seeds,
        hard_churn: hard_churn(&pp)?,
        soft_churn: soft_churn(&pp)?,
        l1_mean: l1s / n,
        l1norm_mean: l1s / n / lp_max(1.0),
        l4_mean: l4s / n,
        l05norm_mean: l05s / n,
        err1,
        err2,
        stability,
        churn_err_bound_holds: check_churn_err_bound(&pp)?.holds,
        hellinger_bound_holds: check_hellinger_sandwich(&pp)?.holds,
        final_train_loss: [
            models[0].history.last().map_or(f64::NAN, |h| h.mean_loss),
            models[1].history.last().map_or(f64::NAN, |h| h.mean_loss),
        ],
    };
    Ok((result, samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobFailure {
    pub job: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSummary {
    pub alpha: f64,
    pub pairs: usize,
    pub failures: usize,
    pub hard_churn: MeanStd,
    pub soft_churn: MeanStd,
    pub l1_mean: MeanStd,
    pub l1norm_mean: MeanStd,
    pub l4_mean: MeanStd,
    pub l05norm_mean: MeanStd,
    pub err: MeanStd,
    pub stability: StabilityCounts,
    pub bounds_hold: bool,
    pub logit_histogram: Histogram,
    pub l1_histogram: Histogram,
    pub l05norm_histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChurnReport {
    pub summaries: Vec<AlphaSummary>,
    pub pairs: Vec<ChurnPairResult>,
    pub failures: Vec<JobFailure>,
}

/// Merges job outcomes, given in the order of [`ChurnSpec::jobs`]. Logit
/// histograms share one range across α so they can be compared.
pub fn aggregate_churn(
    spec: &ChurnSpec,
    outcomes: Vec<core::result::Result<(ChurnPairResult, PairSamples), Error>>,
) -> Result<ChurnReport> {
    let jobs = spec.jobs();
    if outcomes.len() != jobs.len() {
        return Err(Error::DimensionMismatch { left: jobs.len(), right: outcomes.len() });
    }
    let mut pairs = Vec::new();
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    let mut failed_per_alpha = alloc::vec![0usize; spec.alphas.len()];
    for (i, (job, outcome)) in jobs.iter().zip(outcomes).enumerate() {
        match outcome {
            Ok((r, s)) => {
                pairs.push((job.alpha_index, r));
                samples.push(s);
            }
            Err(e) => {
                failed_per_alpha[job.alpha_index] += 1;
                failures.push(JobFailure { job: i, error: format!("{e}") });
            }
        }
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in samples.iter().flat_map(|s| s.logits.iter()) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let logit_bins = if lo < hi {
        BinSpec::Range { lo, hi, bins: spec.histogram_bins }
    } else {
        BinSpec::Uniform { bins: spec.histogram_bins }
    };
    let mut summaries = Vec::with_capacity(spec.alphas.len());
    for (ai, &alpha) in spec.alphas.iter().enumerate() {
        let rows: Vec<(&ChurnPairResult, &PairSamples)> =
            pairs.iter().zip(&samples).filter(|((a, _), _)| *a == ai).map(|((_, r), s)| (r, s)).collect();
        let stat = |f: fn(&ChurnPairResult) -> f64| MeanStd::of(&rows.iter().map(|(r, _)| f(r)).collect::<Vec<_>>());
        let pool =
            |f: fn(&PairSamples) -> &Vec<f64>| rows.iter().flat_map(|(_, s)| f(s).iter().copied()).collect::<Vec<_>>();
        let mut stability = StabilityCounts::default();
        rows.iter().for_each(|(r, _)| stability.add(&r.stability));
        let errs: Vec<f64> = rows.iter().flat_map(|(r, _)| [r.err1, r.err2]).collect();
        let hist = |values: Vec<f64>, bins: BinSpec| -> Result<Histogram> {
            if values.is_empty() {
                Ok(Histogram { edges: Vec::new(), counts: Vec::new() })
            } else {
                histogram(&values, &bins)
            }
        };
        summaries.push(AlphaSummary {
            alpha,
            pairs: rows.len(),
            failures: failed_per_alpha[ai],
            hard_churn: stat(|r| r.hard_churn),
            soft_churn: stat(|r| r.soft_churn),
            l1_mean: stat(|r| r.l1_mean),
            l1norm_mean: stat(|r| r.l1norm_mean),
            l4_mean: stat(|r| r.l4_mean),
            l05norm_mean: stat(|r| r.l05norm_mean),
            err: MeanStd::of(&errs),
            stability,
            bounds_hold: rows.iter().all(|(r, _)| r.churn_err_bound_holds && r.hellinger_bound_holds),
            logit_histogram: hist(pool(|s| &s.logits), logit_bins.clone())?,
            l1_histogram: hist(pool(|s| &s.l1), BinSpec::Range { lo: 0.0, hi: 2.0, bins: spec.histogram_bins })?,
            l05norm_histogram: hist(
                pool(|s| &s.l05norm),
                BinSpec::Range { lo: 0.0, hi: 1.0, bins: spec.histogram_bins },
            )?,
        });
    }
    Ok(ChurnReport { summaries, pairs: pairs.into_iter().map(|(_, r)| r).collect(), failures })
}

/// Runs every job in order; the first training failure is returned.
pub fn churn_experiment(spec: &ChurnSpec) -> Result<ChurnReport> {
    let data = spec.prepare()?;
    let mut outcomes = Vec::new();
    for job in spec.jobs() {
        outcomes.push(Ok(run_churn_pair(spec, &data, job)?));
    }
    aggregate_churn(spec, outcomes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrievalSpec {
    /// Its `loss` field is replaced by each entry of `losses`.
    pub base: TrainConfig,
    pub data: PairedSpec,
    pub split_seed: u64,
    #[serde(default = "default_holdout")]
    pub holdout_fraction: f64,
    pub losses: Vec<XexVariant>,
    /// Run `s` trains with `seed_init + s` and `seed_shuffle + s`.
    pub seeds: Vec<u64>,
    #[serde(default = "default_profile_queries")]
    pub profile_queries: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalJob {
    pub loss_index: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct RetrievalData {
    pub train: PairedDataset,
    pub holdout: PairedDataset,
}

pub const RECALL_KS: [usize; 3] = [1, 5, 10];

impl RetrievalSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.losses.is_empty() {
            return Err(Error::Empty("losses"));
        }
        if self.seeds.is_empty() {
            return Err(Error::Empty("seeds"));
        }
        if self.profile_queries == 0 {
            return Err(Error::InvalidSize("profile_queries must be positive".into()));
        }
        if self.base.embed_dim.is_none() {
            return Err(Error::InvalidSize("embed_dim is required for retrieval".into()));
        }
        Ok(())
    }

    pub fn prepare(&self) -> Result<RetrievalData> {
        self.validate()?;
        let full = self.data.generate()?;
        let (train, test) = holdout_split(self.split_seed, full.len(), self.holdout_fraction)?;
        let holdout = full.subset(&test);
        if holdout.len() < RECALL_KS[RECALL_KS.len() - 1] {
            return Err(Error::InvalidSize(format!("holdout has {} pairs, need at least 10", holdout.len())));
        }
        Ok(RetrievalData { train: full.subset(&train), holdout })
    }

    /// Jobs in output order: loss-major, then seed.
    pub fn jobs(&self) -> Vec<RetrievalJob> {
        (0..self.losses.len())
            .flat_map(|loss_index| self.seeds.iter().map(move |&seed| RetrievalJob { loss_index, seed }))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRunResult {
    pub loss: String,
    pub seed: u64,
    pub recall: [f64; 3],
    pub pr_auc: f64,
    pub envelope_width: f64,
    pub final_train_loss: f64,
    /// Percentile envelopes of the sorted holdout cosine scores.
    pub p05: Vec<f64>,
    pub p95: Vec<f64>,
}

/// Holdout cosine similarities of a trained or untrained dual encoder.
pub fn holdout_cosines(
    query: &super::ModelParams,
    doc: &super::ModelParams,
    holdout: &PairedDataset,
) -> Result<crate::linalg::Matrix> {
    cosine_matrix(&forward(query, &holdout.queries)?, &forward(doc, &holdout.docs)?)
}

pub fn run_retrieval(spec: &RetrievalSpec, data: &RetrievalData, job: RetrievalJob) -> Result<RetrievalRunResult> {
    let variant = *spec
        .losses
        .get(job.loss_index)
        .ok_or(Error::IndexOutOfRange { index: job.loss_index, len: spec.losses.len() })?;
    let cfg = TrainConfig {
        seed_init: spec.base.seed_init.wrapping_add(job.seed),
        seed_shuffle: spec.base.seed_shuffle.wrapping_add(job.seed),
        loss: LossFamily::Xex(variant),
        ..spec.base.clone()
    };
    let model = train_dual_encoder(&cfg, &data.train)?;
    let cos = holdout_cosines(&model.query, &model.doc, &data.holdout)?;
    let mut recall = [0.0; 3];
    for (r, &k) in recall.iter_mut().zip(RECALL_KS.iter()) {
        *r = recall_at_k(&cos, k)?;
    }
    let pr = pairwise_pr_curve(&cos)?;
    let queries: Vec<usize> = (0..spec.profile_queries.min(cos.rows())).collect();
    let profile = score_distribution_profile(&cos, &queries)?;
    Ok(RetrievalRunResult {
        loss: variant.name().into(),
        seed: job.seed,
        recall,
        pr_auc: pr.auc,
        envelope_width: profile.mean_envelope_width(),
        final_train_loss: model.history.last().map_or(f64::NAN, |h| h.mean_loss),
        p05: profile.p05,
        p95: profile.p95,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub loss: String,
    pub variant: XexVariant,
    pub runs: usize,
    pub failures: usize,
    pub recall: [MeanStd; 3],
    pub pr_auc: MeanStd,
    pub envelope_width: MeanStd,
    /// Envelopes averaged over runs.
    pub p05: Vec<f64>,
    pub p95: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub summaries: Vec<LossSummary>,
    pub runs: Vec<RetrievalRunResult>,
    pub failures: Vec<JobFailure>,
}

/// Merges outcomes given in the order of [`RetrievalSpec::jobs`].
pub fn aggregate_retrieval(
    spec: &RetrievalSpec,
    outcomes: Vec<core::result::Result<RetrievalRunResult, Error>>,
) -> Result<RetrievalReport> {
    let jobs = spec.jobs();
    if outcomes.len() != jobs.len() {
        return Err(Error::DimensionMismatch { left: jobs.len(), right: outcomes.len() });
    }
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    let mut failed = alloc::vec![0usize; spec.losses.len()];
    for (i, (job, outcome)) in jobs.iter().zip(outcomes).enumerate() {
        match outcome {
            Ok(r) => runs.push((job.loss_index, r)),
            Err(e) => {
                failed[job.loss_index] += 1;
                failures.push(JobFailure { job: i, error: format!("{e}") });
            }
        }
    }
    let summaries = spec
        .losses
        .iter()
        .enumerate()
        .map(|(li, variant)| {
            let rows: Vec<&RetrievalRunResult> = runs.iter().filter(|(l, _)| *l == li).map(|(_, r)| r).collect();
            let stat =
                |f: &dyn Fn(&RetrievalRunResult) -> f64| MeanStd::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
            let avg = |f: fn(&RetrievalRunResult) -> &Vec<f64>| -> Vec<f64> {
                let Some(first) = rows.first() else { return Vec::new() };
                (0..f(first).len()).map(|i| rows.iter().map(|r| f(r)[i]).sum::<f64>() / rows.len() as f64).collect()
            };
            LossSummary {
                loss: variant.name().into(),
                variant: *variant,
                runs: rows.len(),
                failures: failed[li],
                recall: [stat(&|r| r.recall[0]), stat(&|r| r.recall[1]), stat(&|r| r.recall[2])],
                pr_auc: stat(&|r| r.pr_auc),
                envelope_width: stat(&|r| r.envelope_width),
                p05: avg(|r| &r.p05),
                p95: avg(|r| &r.p95),
            }
        })
        .collect();
    Ok(RetrievalReport { summaries, runs: runs.into_iter().map(|(_, r)| r).collect(), failures })
}

pub fn retrieval_experiment(spec: &RetrievalSpec) -> Result<RetrievalReport> {
    let data = spec.prepare()?;
    let mut outcomes = Vec::new();
    for job in spec.jobs() {
        outcomes.push(Ok(run_retrieval(spec, &data, job)?));
    }
    aggregate_retrieval(spec, outcomes)
}
