use std::path::{Path, PathBuf};

use churnlab_core::churn::{
    check_churn_err_bound, check_hellinger_sandwich, check_kl_proxy_bound, check_margin_event, ChurnErrReport,
    HellingerReport, KlProxyReport, MarginReport, PairedPredictions,
};
use churnlab_core::prob::{BinaryProb, ProbVector};
use churnlab_core::reg_loss::{entropic_log_loss, entropic_logistic_loss, kl_log_loss, kl_logistic_loss};
use churnlab_core::reject::{bayes_optimal_score, convex_surrogate, link, smooth_surrogate, GridSearch, RejectParams};
use churnlab_core::train::{
    aggregate_churn, aggregate_retrieval, run_churn_pair, run_retrieval, ChurnReport, ChurnSpec, RetrievalReport,
    RetrievalSpec, RECALL_KS,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cli::{BoundsArgs, Command, CurveForm, CurveLoss, LossCurveArgs, RejectMapArgs, RunArgs};
use crate::config::{load_config, Experiment, LoadedConfig};
use crate::output::{write_json, Cell, CsvTable, ResultsBundle};
use crate::pool::{run_jobs, worker_count};
use crate::{CliError, Result, TOOL_NAME, TOOL_VERSION};

/// What a command wrote and how many checks or runs went wrong.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub problems: usize,
    pub lines: Vec<String>,
}

pub fn run(command: &Command) -> Result<Outcome> {
    match command {
        Command::Losscurve(a) => losscurve(a),
        Command::Bounds(a) => bounds(a),
        Command::Churn(a) => churn(a),
        Command::Retrieval(a) => retrieval(a),
        Command::Rejectmap(a) => rejectmap(a),
    }
}

/// Parses `LO:HI:N` into N evenly spaced points.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || CliError::Usage(format!("bad grid {spec:?}, expected LO:HI:N"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, n] = parts[..] else { return Err(bad()) };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo || (n == 1 && hi != lo) {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect())
}

fn curve_grid(args: &LossCurveArgs) -> Result<Vec<f64>> {
    let grid = match (&args.grid, args.points.is_empty()) {
        (Some(g), _) => parse_grid(g)?,
        (None, false) => args.points.clone(),
        (None, true) => parse_grid(match (args.loss, args.form) {
            (CurveLoss::Entropic | CurveLoss::Kl, CurveForm::Log) => "0.001:0.999:999",
            (CurveLoss::Entropic | CurveLoss::Kl, CurveForm::Logistic) => "-10:10:401",
            (CurveLoss::Reject | CurveLoss::Link, _) => "-3:3:601",
        })?,
    };
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Usage("grid points must be finite".into()));
    }
    Ok(grid)
}

pub fn losscurve(args: &LossCurveArgs) -> Result<Outcome> {
    let grid = curve_grid(args)?;
    let alphas = if args.alpha.is_empty() {
        match args.loss {
            CurveLoss::Entropic | CurveLoss::Kl => vec![0.0, 0.1, 0.3, 0.5],
            CurveLoss::Reject | CurveLoss::Link => vec![1.0, 2.0, 4.0, 8.0],
        }
    } else {
        args.alpha.clone()
    };
    let name = match args.loss {
        CurveLoss::Entropic => "entropic",
        CurveLoss::Kl => "kl",
        CurveLoss::Reject => "reject",
        CurveLoss::Link => "link",
    };
    let table = match args.loss {
        CurveLoss::Entropic | CurveLoss::Kl => {
            if args.label > 1 {
                return Err(CliError::Usage("label must be 0 or 1".into()));
            }
            let mut t = CsvTable::new(&["x", "value", "alpha"]);
            for &alpha in &alphas {
                for &x in &grid {
                    let v = binary_reg_loss(args.loss, args.form, x, args.label, alpha)?;
                    t.row(&[Cell::F(x), Cell::F(v), Cell::F(alpha)]);
                }
            }
            t
        }
        CurveLoss::Reject => {
            // the convex surrogate is the α → ∞ limit and is listed as alpha = inf
            let mut t = CsvTable::new(&["x", "value", "alpha", "d"]);
            for &alpha in &alphas {
                let p = RejectParams::new(args.d, 0.0, alpha)?;
                for &z in &grid {
                    t.row(&[Cell::F(z), Cell::F(smooth_surrogate(z, &p).value), Cell::F(alpha), Cell::F(args.d)]);
                }
            }
            let p = RejectParams::new(args.d, 0.0, 1.0)?;
            for &z in &grid {
                t.row(&[Cell::F(z), Cell::F(convex_surrogate(z, &p)), Cell::F(f64::INFINITY), Cell::F(args.d)]);
            }
            t
        }
        CurveLoss::Link => {
            let mut t = CsvTable::new(&["x", "value", "alpha", "d"]);
            for &alpha in &alphas {
                let p = RejectParams::new(args.d, 0.0, alpha)?;
                for &v in &grid {
                    t.row(&[Cell::F(v), Cell::F(link(v, &p)?), Cell::F(alpha), Cell::F(args.d)]);
                }
            }
            t
        }
    };
    let path = args.out.join(format!("losscurve_{name}.csv"));
    table.write(&path)?;
    Ok(Outcome { files: vec![path], problems: 0, lines: vec![format!("{name}: {} points", grid.len() * alphas.len())] })
}

fn binary_reg_loss(loss: CurveLoss, form: CurveForm, x: f64, y: usize, alpha: f64) -> Result<f64> {
    Ok(match (loss, form) {
        (CurveLoss::Entropic, CurveForm::Logistic) => entropic_logistic_loss(x, y, alpha)?.value,
        (CurveLoss::Kl, CurveForm::Logistic) => kl_logistic_loss(x, y, alpha)?.value,
        (_, CurveForm::Log) => {
            let p = ProbVector::binary(BinaryProb::new(x)?);
            if loss == CurveLoss::Entropic {
                entropic_log_loss(&p, y, alpha)?
            } else {
                kl_log_loss(&p, y, alpha)?
            }
        }
        _ => unreachable!("reject and link have no binary form"),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassBounds {
    pub classes: usize,
    pub violations: usize,
    pub churn_err: ChurnErrReport,
    pub kl_proxy: KlProxyReport,
    pub hellinger: HellingerReport,
    pub margin: MarginReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub samples: usize,
    pub violations: usize,
    /// Smallest slack over all checkers that report one.
    pub min_slack: f64,
    pub results: Vec<ClassBounds>,
}

pub fn bounds_report(samples: usize, seed: u64, classes: &[usize]) -> Result<BoundsReport> {
    if samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    if classes.is_empty() {
        return Err(CliError::Usage("--classes must not be empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::with_capacity(classes.len());
    for &k in classes {
        let pp = PairedPredictions::random(&mut rng, samples, k, true)?;
        let churn_err = check_churn_err_bound(&pp)?;
        let kl_proxy = check_kl_proxy_bound(&pp)?;
        let hellinger = check_hellinger_sandwich(&pp)?;
        let margin = check_margin_event(&pp)?;
        let violations = usize::from(!churn_err.holds)
            + kl_proxy.violations
            + hellinger.pointwise_violations
            + usize::from(!hellinger.holds && hellinger.pointwise_violations == 0)
            + margin.violations
            + usize::from(!margin.holds && margin.violations == 0);
        results.push(ClassBounds { classes: k, violations, churn_err, kl_proxy, hellinger, margin });
    }
    let min_slack = results
        .iter()
        .flat_map(|r| [r.churn_err.slack, r.kl_proxy.min_slack, r.hellinger.min_slack, r.margin.min_slack])
        .fold(f64::INFINITY, f64::min);
    Ok(BoundsReport {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        seed,
        samples,
        violations: results.iter().map(|r| r.violations).sum(),
        min_slack,
        results,
    })
}

pub fn bounds(args: &BoundsArgs) -> Result<Outcome> {
    let report = bounds_report(args.samples, args.seed, &args.classes)?;
    let mut files = Vec::new();
    if let Some(dir) = &args.out {
        let path = dir.join("bounds.json");
        write_json(&path, &report)?;
        files.push(path);
    }
    let lines = vec![serde_json::to_string_pretty(&report)?];
    Ok(Outcome { files, problems: report.violations, lines })
}

fn output_dir(args: &RunArgs, cfg: &LoadedConfig) -> Result<PathBuf> {
    args.out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set output_dir".into()))
}

pub fn churn(args: &RunArgs) -> Result<Outcome> {
    let cfg = load_config(&args.config)?;
    let Experiment::Churn(spec) = &cfg.experiment else {
        return Err(CliError::Usage(format!("{} is not a churn config", args.config.display())));
    };
    let out = output_dir(args, &cfg)?;
    run_churn(spec, &cfg, &out)
}

pub fn run_churn(spec: &ChurnSpec, cfg: &LoadedConfig, out: &Path) -> Result<Outcome> {
    let data = spec.prepare()?;
    let jobs = spec.jobs();
    let outcomes = run_jobs(&jobs, worker_count(), |&job| run_churn_pair(spec, &data, job));
    let mut files = Vec::new();
    for (job, outcome) in jobs.iter().zip(&outcomes) {
        let path = out.join("runs").join(format!("churn_a{:02}_p{:03}.json", job.alpha_index, job.pair_id));
        match outcome {
            Ok((r, _)) => write_json(&path, r)?,
            Err(e) => write_json(&path, &serde_json::json!({ "job": job, "error": e.to_string() }))?,
        }
        files.push(path);
    }
    let report = aggregate_churn(spec, outcomes)?;
    files.extend(write_churn_tables(&report, out)?);
    let bundle_path = out.join("bundle.json");
    write_json(
        &bundle_path,
        &ResultsBundle {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            config_digest: &cfg.digest,
            config: &cfg.experiment,
            results: &report,
        },
    )?;
    files.push(bundle_path);
    let bound_failures = report.pairs.iter().filter(|p| !(p.churn_err_bound_holds && p.hellinger_bound_holds)).count();
    let lines = report
        .summaries
        .iter()
        .map(|s| {
            format!(
                "alpha={} pairs={} hard_churn={:.6} soft_churn={:.6} l1={:.6} err={:.6}",
                s.alpha, s.pairs, s.hard_churn.mean, s.soft_churn.mean, s.l1_mean.mean, s.err.mean
            )
        })
        .collect();
    Ok(Outcome { files, problems: report.failures.len() + bound_failures, lines })
}

fn write_churn_tables(report: &ChurnReport, out: &Path) -> Result<Vec<PathBuf>> {
    let mut t = CsvTable::new(&[
        "alpha",
        "pair_id",
        "hard_churn",
        "soft_churn",
        "l1_mean",
        "l1norm_mean",
        "l4_mean",
        "l05norm_mean",
        "err1",
        "err2",
    ]);
    for p in &report.pairs {
        t.row(&[
            Cell::F(p.alpha),
            Cell::U(p.pair_id as u64),
            Cell::F(p.hard_churn),
            Cell::F(p.soft_churn),
            Cell::F(p.l1_mean),
            Cell::F(p.l1norm_mean),
            Cell::F(p.l4_mean),
            Cell::F(p.l05norm_mean),
            Cell::F(p.err1),
            Cell::F(p.err2),
        ]);
    }
    let mut summary = CsvTable::new(&[
        "alpha",
        "pairs",
        "failures",
        "hard_churn_mean",
        "hard_churn_std",
        "soft_churn_mean",
        "soft_churn_std",
        "l1_mean_mean",
        "l1_mean_std",
        "l05norm_mean_mean",
        "l05norm_mean_std",
        "err_mean",
        "err_std",
    ]);
    let mut stability =
        CsvTable::new(&["alpha", "both_correct", "both_wrong_same", "one_correct", "both_wrong_different"]);
    let mut hists = [
        ("hist_logits.csv", CsvTable::new(&["alpha", "bin_lo", "bin_hi", "count"])),
        ("hist_l1.csv", CsvTable::new(&["alpha", "bin_lo", "bin_hi", "count"])),
        ("hist_l05norm.csv", CsvTable::new(&["alpha", "bin_lo", "bin_hi", "count"])),
    ];
    for s in &report.summaries {
        summary.row(&[
            Cell::F(s.alpha),
            Cell::U(s.pairs as u64),
            Cell::U(s.failures as u64),
            Cell::F(s.hard_churn.mean),
            Cell::F(s.hard_churn.std),
            Cell::F(s.soft_churn.mean),
            Cell::F(s.soft_churn.std),
            Cell::F(s.l1_mean.mean),
            Cell::F(s.l1_mean.std),
            Cell::F(s.l05norm_mean.mean),
            Cell::F(s.l05norm_mean.std),
            Cell::F(s.err.mean),
            Cell::F(s.err.std),
        ]);
        let st = s.stability;
        stability.row(&[
            Cell::F(s.alpha),
            Cell::U(st.both_correct),
            Cell::U(st.both_wrong_same),
            Cell::U(st.one_correct),
            Cell::U(st.both_wrong_different),
        ]);
        for ((_, table), h) in hists.iter_mut().zip([&s.logit_histogram, &s.l1_histogram, &s.l05norm_histogram]) {
            for (i, &c) in h.counts.iter().enumerate() {
                table.row(&[Cell::F(s.alpha), Cell::F(h.edges[i]), Cell::F(h.edges[i + 1]), Cell::U(c)]);
            }
        }
    }
    let mut files = Vec::new();
    for (name, table) in [("churn.csv", &t), ("churn_summary.csv", &summary), ("stability.csv", &stability)]
        .into_iter()
        .chain(hists.iter().map(|(n, t)| (*n, t)))
    {
        let path = out.join(name);
        table.write(&path)?;
        files.push(path);
    }
    Ok(files)
}

pub fn retrieval(args: &RunArgs) -> Result<Outcome> {
    let cfg = load_config(&args.config)?;
    let Experiment::Retrieval(spec) = &cfg.experiment else {
        return Err(CliError::Usage(format!("{} is not a retrieval config", args.config.display())));
    };
    let out = output_dir(args, &cfg)?;
    run_retrieval_experiment(spec, &cfg, &out)
}

pub fn run_retrieval_experiment(spec: &RetrievalSpec, cfg: &LoadedConfig, out: &Path) -> Result<Outcome> {
    let data = spec.prepare()?;
    let jobs = spec.jobs();
    let outcomes = run_jobs(&jobs, worker_count(), |&job| run_retrieval(spec, &data, job));
    let mut files = Vec::new();
    for (job, outcome) in jobs.iter().zip(&outcomes) {
        let path = out.join("runs").join(format!("retrieval_l{:02}_s{}.json", job.loss_index, job.seed));
        match outcome {
            Ok(r) => write_json(&path, r)?,
            Err(e) => write_json(&path, &serde_json::json!({ "job": job, "error": e.to_string() }))?,
        }
        files.push(path);
    }
    let report = aggregate_retrieval(spec, outcomes)?;
    files.extend(write_retrieval_tables(&report, out)?);
    let bundle_path = out.join("bundle.json");
    write_json(
        &bundle_path,
        &ResultsBundle {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            config_digest: &cfg.digest,
            config: &cfg.experiment,
            results: &report,
        },
    )?;
    files.push(bundle_path);
    let lines = report
        .summaries
        .iter()
        .map(|s| {
            format!(
                "{} runs={} recall@1={:.4} recall@10={:.4} pr_auc={:.6} envelope={:.6}",
                s.loss, s.runs, s.recall[0].mean, s.recall[2].mean, s.pr_auc.mean, s.envelope_width.mean
            )
        })
        .collect();
    Ok(Outcome { files, problems: report.failures.len(), lines })
}

fn write_retrieval_tables(report: &RetrievalReport, out: &Path) -> Result<Vec<PathBuf>> {
    let recall_cols: Vec<String> = RECALL_KS.iter().map(|k| format!("recall@{k}")).collect();
    let mut header = vec!["loss", "seed"];
    header.extend(recall_cols.iter().map(String::as_str));
    header.push("pr_auc");
    let mut runs = CsvTable::new(&header);
    for r in &report.runs {
        runs.row(&[
            Cell::S(&r.loss),
            Cell::U(r.seed),
            Cell::F(r.recall[0]),
            Cell::F(r.recall[1]),
            Cell::F(r.recall[2]),
            Cell::F(r.pr_auc),
        ]);
    }
    let mut summary = CsvTable::new(&[
        "loss",
        "runs",
        "failures",
        "recall@1_mean",
        "recall@5_mean",
        "recall@10_mean",
        "pr_auc_mean",
        "pr_auc_std",
        "envelope_width_mean",
        "envelope_width_std",
    ]);
    let mut envelope = CsvTable::new(&["loss", "rank", "p05", "p95"]);
    let mut run_envelopes = CsvTable::new(&["loss", "seed", "rank", "p05", "p95"]);
    for s in &report.summaries {
        summary.row(&[
            Cell::S(&s.loss),
            Cell::U(s.runs as u64),
            Cell::U(s.failures as u64),
            Cell::F(s.recall[0].mean),
            Cell::F(s.recall[1].mean),
            Cell::F(s.recall[2].mean),
            Cell::F(s.pr_auc.mean),
            Cell::F(s.pr_auc.std),
            Cell::F(s.envelope_width.mean),
            Cell::F(s.envelope_width.std),
        ]);
        for (i, (lo, hi)) in s.p05.iter().zip(&s.p95).enumerate() {
            envelope.row(&[Cell::S(&s.loss), Cell::U(i as u64 + 1), Cell::F(*lo), Cell::F(*hi)]);
        }
    }
    for r in &report.runs {
        for (i, (lo, hi)) in r.p05.iter().zip(&r.p95).enumerate() {
            run_envelopes.row(&[Cell::S(&r.loss), Cell::U(r.seed), Cell::U(i as u64 + 1), Cell::F(*lo), Cell::F(*hi)]);
        }
    }
    let mut files = Vec::new();
    for (name, table) in [
        ("retrieval.csv", &runs),
        ("retrieval_summary.csv", &summary),
        ("envelope.csv", &envelope),
        ("envelope_runs.csv", &run_envelopes),
    ] {
        let path = out.join(name);
        table.write(&path)?;
        files.push(path);
    }
    Ok(files)
}

pub fn rejectmap(args: &RejectMapArgs) -> Result<Outcome> {
    let grid = parse_grid(&args.grid)?;
    if grid.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(CliError::Usage("eta grid must lie inside (0, 1)".into()));
    }
    if args.alpha.is_empty() {
        return Err(CliError::Usage("--alpha must not be empty".into()));
    }
    let search = GridSearch::default();
    let mut t = CsvTable::new(&["eta", "z", "alpha", "d"]);
    for &alpha in &args.alpha {
        let p = RejectParams::new(args.d, 0.0, alpha)?;
        for &eta in &grid {
            let z = bayes_optimal_score(BinaryProb::new(eta)?, &p, &search)?;
            t.row(&[Cell::F(eta), Cell::F(z), Cell::F(alpha), Cell::F(args.d)]);
        }
    }
    let path = args.out.join("rejectmap.csv");
    t.write(&path)?;
    Ok(Outcome { files: vec![path], problems: 0, lines: vec![format!("{} rows", grid.len() * args.alpha.len())] })
}
