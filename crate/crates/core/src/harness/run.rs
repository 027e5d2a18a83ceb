//! Dispatch from a configuration to a finished report.

use std::time::Instant;

use rand::Rng;
use serde_json::json;

use super::config::{
    Experiment, ExperimentConfig, HideSeekAlgorithm, HideSeekExperiment, PcaAlgorithm, SampleSize, SparsePcaExperiment,
    StochOptExperiment,
};
use super::par_map;
use super::regret::run_regret_experiment;
use super::report::ExperimentReport;
use super::success::{
    estimate_success_prob, find_sample_threshold, DetectionTask, FullInfoTask, PairScanTask, PcaPluginTask, SegmentScanTask,
    SuccessEstimate,
};
use super::verify::run_verify_suite;
use crate::distributions::MatrixOptSpec;
use crate::error::Result;
use crate::estimators::{stochopt_plugin, Detection};
use crate::protocol::kl_bound_sweep;
use crate::rng::{stream, Purpose};

pub const SUCCESS_COLUMNS: [&str; 8] = ["algorithm", "m", "hidden", "trials", "successes", "p_hat", "wilson_lo", "wilson_hi"];
pub const REGRET_COLUMNS: [&str; 6] = ["learner", "t", "mean_regret_vs_biased", "se_vs_biased", "mean_regret_vs_best", "se_vs_best"];
pub const STOCHOPT_COLUMNS: [&str; 10] =
    ["trial", "i_star", "j_star", "i_hat", "j_hat", "value_gap", "empirical_min", "value_error", "bound", "within"];
pub const VERIFY_COLUMNS: [&str; 7] = ["group", "case_id", "quantity", "value", "bound", "margin", "holds"];
pub const ENUMERATE_COLUMNS: [&str; 8] = ["protocol_id", "j", "kl_nats", "lhs", "bound", "rhs", "margin", "holds"];

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn label(d: Detection) -> String {
    match d {
        Detection::Coordinate { index } => index.to_string(),
        Detection::Pair { i, j } | Detection::Entry { i, j } => format!("{i}-{j}"),
    }
}

fn success_rows<T: DetectionTask + ?Sized>(task: &T, est: &SuccessEstimate, per_hidden: bool, rows: &mut Vec<Vec<String>>) {
    let name = task.name();
    rows.push(vec![
        name.clone(),
        est.m.to_string(),
        "all".into(),
        est.trials.to_string(),
        est.successes.to_string(),
        est.p_hat.to_string(),
        est.ci.lo.to_string(),
        est.ci.hi.to_string(),
    ]);
    if per_hidden {
        for t in &est.per_hidden {
            let ci = super::stats::wilson(t.successes, t.trials);
            rows.push(vec![
                name.clone(),
                est.m.to_string(),
                label(task.truth(t.hidden)),
                t.trials.to_string(),
                t.successes.to_string(),
                (t.successes as f64 / t.trials as f64).to_string(),
                ci.lo.to_string(),
                ci.hi.to_string(),
            ]);
        }
    }
}

/// Fixed-size runs report every hidden value; threshold searches report one pooled row per probe.
fn run_tasks(
    tasks: &[Box<dyn DetectionTask>],
    budget: SampleSize,
    trials: usize,
    seed: u64,
) -> Result<(Vec<Vec<String>>, serde_json::Value)> {
    let mut rows = Vec::new();
    let mut summary = serde_json::Map::new();
    let mut first_threshold: Option<f64> = None;
    for task in tasks {
        match budget {
            SampleSize::Fixed { m } => {
                let est = estimate_success_prob(task.as_ref(), m, trials, seed)?;
                success_rows(task.as_ref(), &est, true, &mut rows);
                summary.insert(
                    task.name(),
                    json!({"m": m, "p_hat": est.p_hat, "wilson_lo": est.ci.lo, "wilson_hi": est.ci.hi,
                           "min_hidden": est.min_hidden, "mean_hidden": est.mean_hidden}),
                );
            }
            SampleSize::Threshold { target, m_lo, m_hi } => {
                let r = find_sample_threshold(task.as_ref(), target, m_lo, m_hi, trials, seed)?;
                for p in &r.probes {
                    success_rows(task.as_ref(), p, false, &mut rows);
                }
                let ratio = first_threshold.map(|f| r.m_star as f64 / f);
                first_threshold.get_or_insert(r.m_star as f64);
                summary.insert(
                    task.name(),
                    json!({"target": target, "m_star": r.m_star, "lo": r.lo, "hi": r.hi,
                           "monotonicity_violations": r.monotonicity_violations, "ratio_to_first": ratio}),
                );
            }
        }
    }
    Ok((rows, serde_json::Value::Object(summary)))
}

fn hideseek_tasks(h: &HideSeekExperiment) -> Vec<Box<dyn DetectionTask>> {
    h.algorithms
        .iter()
        .map(|a| -> Box<dyn DetectionTask> {
            match *a {
                HideSeekAlgorithm::FullInfo => Box::new(FullInfoTask { d: h.d, rho: h.rho }),
                HideSeekAlgorithm::SegmentScan { segment_size, delta } => {
                    Box::new(SegmentScanTask { d: h.d, rho: h.rho, segment_size, delta })
                }
            }
        })
        .collect()
}

fn pca_tasks(s: &SparsePcaExperiment) -> Vec<Box<dyn DetectionTask>> {
    s.algorithms
        .iter()
        .map(|a| -> Box<dyn DetectionTask> {
            match *a {
                PcaAlgorithm::Plugin => Box::new(PcaPluginTask { d: s.d, rho: s.rho }),
                PcaAlgorithm::PairScan { counters } => Box::new(PairScanTask { d: s.d, rho: s.rho, counters }),
            }
        })
        .collect()
}

fn stochopt(s: &StochOptExperiment, trials: usize, seed: u64) -> Result<(Vec<Vec<String>>, serde_json::Value)> {
    let bound = s.bound_constant * ((s.d as f64).ln() / s.m as f64).sqrt();
    let results = par_map(trials, |trial| -> Result<Vec<String>> {
        let t = trial as u64;
        let pair = s.pair.unwrap_or_else(|| {
            let mut r = stream(seed, t, Purpose::Hidden);
            (r.random_range(0..s.d), r.random_range(0..s.d))
        });
        let spec = MatrixOptSpec::new(s.d, s.beta, pair)?;
        let mut rng = stream(seed, t, Purpose::Data);
        let r = stochopt_plugin(std::iter::repeat_with(|| spec.sample(&mut rng)).take(s.m), &spec)
            .map_err(|e| e.in_trial(format!("stochopt trial {trial}")))?;
        let Detection::Entry { i, j } = r.entry else { unreachable!("plug-in returns an entry") };
        let within = r.value_gap <= bound && r.value_error <= bound;
        Ok(vec![
            trial.to_string(),
            pair.0.to_string(),
            pair.1.to_string(),
            i.to_string(),
            j.to_string(),
            r.value_gap.to_string(),
            r.empirical_min.to_string(),
            r.value_error.to_string(),
            bound.to_string(),
            within.to_string(),
        ])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let within = results.iter().filter(|r| r[9] == "true").count();
    let summary = json!({"bound": bound, "within": within, "trials": trials, "fraction_within": within as f64 / trials as f64});
    Ok((results, summary))
}

/// Columns, rows, summary and the pass flag.
type Body = (Vec<String>, Vec<Vec<String>>, serde_json::Value, bool);

fn run_body(config: &ExperimentConfig) -> Result<Body> {
    let (trials, seed) = (config.trials, config.seed);
    match &config.experiment {
        Experiment::Hideseek(h) => {
            let (rows, summary) = run_tasks(&hideseek_tasks(h), h.budget, trials, seed)?;
            Ok((columns(&SUCCESS_COLUMNS), rows, summary, true))
        }
        Experiment::Sparsepca(s) => {
            let m = s.m();
            let (rows, mut summary) = run_tasks(&pca_tasks(s), SampleSize::Fixed { m }, trials, seed)?;
            summary["tau"] = json!(2.0 * s.rho / (s.d as f64 - 1.0));
            Ok((columns(&SUCCESS_COLUMNS), rows, summary, true))
        }
        Experiment::Regret(r) => {
            let curves = run_regret_experiment(r, trials, seed)?;
            let rows = curves
                .points
                .iter()
                .map(|p| {
                    vec![
                        p.learner.name().to_string(),
                        p.t.to_string(),
                        p.mean_vs_biased.to_string(),
                        p.se_vs_biased.to_string(),
                        p.mean_vs_best.to_string(),
                        p.se_vs_best.to_string(),
                    ]
                })
                .collect();
            Ok((columns(&REGRET_COLUMNS), rows, serde_json::to_value(&curves.summary)?, true))
        }
        Experiment::Stochopt(s) => {
            let (rows, summary) = stochopt(s, trials, seed)?;
            Ok((columns(&STOCHOPT_COLUMNS), rows, summary, true))
        }
        Experiment::Verify(v) => {
            let r = run_verify_suite(v, seed)?;
            let rows = r
                .rows
                .iter()
                .map(|c| {
                    vec![
                        c.group.clone(),
                        c.case_id.clone(),
                        c.quantity.clone(),
                        c.value.to_string(),
                        c.bound.to_string(),
                        c.margin.to_string(),
                        c.holds.to_string(),
                    ]
                })
                .collect();
            let summary = json!({"groups": r.groups, "missing": r.missing, "all_hold": r.all_hold});
            Ok((columns(&VERIFY_COLUMNS), rows, summary, r.all_hold))
        }
        Experiment::Enumerate(e) => {
            let sweep = kl_bound_sweep(e.family)?;
            let all = sweep.iter().all(|r| r.holds);
            let min_margin = sweep.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
            let rows = sweep
                .iter()
                .map(|r| {
                    vec![
                        r.protocol_id.to_string(),
                        r.j.to_string(),
                        r.kl_nats.to_string(),
                        r.lhs.to_string(),
                        r.bound.name().to_string(),
                        r.rhs.to_string(),
                        r.margin.to_string(),
                        r.holds.to_string(),
                    ]
                })
                .collect();
            let protocols = sweep.iter().map(|r| r.protocol_id).collect::<std::collections::BTreeSet<_>>().len();
            let summary = json!({"protocols": protocols, "all_hold": all, "min_margin": min_margin});
            Ok((columns(&ENUMERATE_COLUMNS), rows, summary, all))
        }
    }
}

/// Runs the configured experiment on `config.threads` worker threads (all cores when unset).
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let (columns, rows, summary, passed) = with_threads(config.threads, || run_body(config))?;
    Ok(ExperimentReport {
        config: config.clone(),
        columns,
        rows,
        summary,
        passed,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| crate::error::Error::Config(format!("thread pool: {e}")))?
            .install(f),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(_threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    f()
}
