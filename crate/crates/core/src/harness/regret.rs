//! Regret curves of Hedge and the one-bit learner on shared loss sequences.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::RegretExperiment;
use super::par_map;
use super::stats::mean_se;
use crate::distributions::BanditLossSpec;
use crate::error::Result;
use crate::estimators::{default_exploration, default_hedge_rate, run_bandit_on, run_hedge_on, sample_losses, RegretTrace};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    Hedge,
    Bandit,
}

impl Learner {
    pub fn name(&self) -> &'static str {
        match self {
            Learner::Hedge => "hedge",
            Learner::Bandit => "bandit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub learner: Learner,
    pub t: usize,
    pub mean_vs_biased: f64,
    pub se_vs_biased: f64,
    pub mean_vs_best: f64,
    pub se_vs_best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretSummary {
    pub rho: f64,
    pub eta: f64,
    pub gamma: f64,
    /// `2 sqrt(T ln d)`.
    pub hedge_ceiling: f64,
    /// `0.05 sqrt(d T)`.
    pub bandit_floor: f64,
    pub hedge_final_best: f64,
    pub bandit_final_best: f64,
    pub hedge_final_biased: f64,
    pub bandit_final_biased: f64,
    /// Bandit over Hedge mean regret against the best action at the last checkpoint.
    pub ratio_best: f64,
    /// The same ratio against the biased action.
    pub ratio_biased: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretCurves {
    pub checkpoints: Vec<usize>,
    pub points: Vec<CurvePoint>,
    pub summary: RegretSummary,
}

/// `c` evenly spaced round counts ending at `horizon`.
pub fn checkpoint_grid(horizon: usize, c: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (1..=c).map(|k| (k * horizon).div_ceil(c).max(1)).collect();
    grid.dedup();
    grid
}

/// `[learner][metric][checkpoint]` with metric 0 = vs biased action, 1 = vs best action.
type TrialCurves = [[Vec<f64>; 2]; 2];

/// Runs both learners for `trials` trials. Each trial draws the biased action
/// and one loss sequence, and both learners face that same sequence.
pub fn run_regret_experiment(params: &RegretExperiment, trials: usize, seed: u64) -> Result<RegretCurves> {
    let (d, horizon) = (params.d, params.horizon);
    let rho = params.rho();
    let eta = params.eta.unwrap_or_else(|| default_hedge_rate(d, horizon));
    let grid = checkpoint_grid(horizon, params.checkpoints);
    let per_trial = par_map(trials, |trial| -> Result<TrialCurves> {
        let trial = trial as u64;
        let j = stream(seed, trial, Purpose::Hidden).random_range(0..d);
        let spec = BanditLossSpec::new(d, rho, j)?;
        let rows = sample_losses(&spec, horizon, &mut stream(seed, trial, Purpose::Data));
        let hedge = run_hedge_on(d, eta, &rows, &mut stream(seed, trial, Purpose::Protocol))?;
        let bandit = run_bandit_on(d, &rows, &mut stream(seed, trial, Purpose::Aux))?;
        let best = |tr: &RegretTrace| -> Vec<f64> { grid.iter().map(|&t| tr.cum_regret_best[t - 1]).collect() };
        Ok([
            [hedge.regret_curve_vs(j, &grid), best(&hedge)],
            [bandit.regret_curve_vs(j, &grid), best(&bandit)],
        ])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let stat = |learner: usize, metric: usize, k: usize| mean_se(&per_trial.iter().map(|c| c[learner][metric][k]).collect::<Vec<_>>());
    let mut points = Vec::new();
    for (li, learner) in [Learner::Hedge, Learner::Bandit].into_iter().enumerate() {
        for (k, &t) in grid.iter().enumerate() {
            let (mean_vs_biased, se_vs_biased) = stat(li, 0, k);
            let (mean_vs_best, se_vs_best) = stat(li, 1, k);
            points.push(CurvePoint { learner, t, mean_vs_biased, se_vs_biased, mean_vs_best, se_vs_best });
        }
    }
    let last = |learner: Learner| *points.iter().rfind(|p| p.learner == learner).expect("non-empty grid");
    let (h, b) = (last(Learner::Hedge), last(Learner::Bandit));
    let tf = horizon as f64;
    let summary = RegretSummary {
        rho,
        eta,
        gamma: default_exploration(d, horizon),
        hedge_ceiling: 2.0 * (tf * (d as f64).ln()).sqrt(),
        bandit_floor: 0.05 * (d as f64 * tf).sqrt(),
        hedge_final_best: h.mean_vs_best,
        bandit_final_best: b.mean_vs_best,
        hedge_final_biased: h.mean_vs_biased,
        bandit_final_biased: b.mean_vs_biased,
        ratio_best: b.mean_vs_best / h.mean_vs_best,
        ratio_biased: b.mean_vs_biased / h.mean_vs_biased,
    };
    Ok(RegretCurves { checkpoints: grid, points, summary })
}
