//! Browser demo: three experiments exported to JavaScript, each returning a JSON string.
//!
//! The `*_json` functions are plain Rust so they can be tested natively; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use hideseek::distributions::HideSeekFamily;
use hideseek::harness::{
    estimate_success_prob, run_regret_experiment, FullInfoTask, Learner, RegretExperiment, SegmentScanTask,
};
use hideseek::protocol::{kl_bound_sweep, KlBound};
use hideseek::Result;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Geometric grid of `points` sample sizes from `m_min` to `m_max`, deduplicated.
pub fn sample_grid(m_min: usize, m_max: usize, points: usize) -> Vec<usize> {
    let (lo, hi) = (m_min.max(1) as f64, m_max.max(m_min).max(1) as f64);
    let mut grid: Vec<usize> = (0..points.max(2))
        .map(|k| (lo * (hi / lo).powf(k as f64 / (points.max(2) - 1) as f64)).round() as usize)
        .collect();
    grid.dedup();
    grid
}

/// Success probability of the full-information argmax and of the segment scan
/// over a grid of sample sizes.
pub fn success_curve_json(d: usize, rho: f64, segment_size: usize, m_max: usize, points: usize, trials: usize, seed: u64) -> Result<Value> {
    let full = FullInfoTask { d, rho };
    let scan = SegmentScanTask { d, rho, segment_size, delta: None };
    let grid = sample_grid(8, m_max, points);
    let mut series = [Vec::new(), Vec::new()];
    for &m in &grid {
        for (k, est) in [estimate_success_prob(&full, m, trials, seed)?, estimate_success_prob(&scan, m, trials, seed)?].into_iter().enumerate() {
            series[k].push(json!({"m": m, "p": est.p_hat, "lo": est.ci.lo, "hi": est.ci.hi}));
        }
    }
    Ok(json!({"m": grid, "full_info": series[0], "segment_scan": series[1]}))
}

/// Mean regret curves of Hedge and the one-bit learner on shared loss sequences.
pub fn regret_curve_json(d: usize, horizon: usize, rho: f64, trials: usize, seed: u64) -> Result<Value> {
    let params = RegretExperiment { d, horizon, rho: Some(rho), c2: 5.9e-3, b: 1, checkpoints: 25, eta: None };
    let curves = run_regret_experiment(&params, trials, seed)?;
    let pick = |learner: Learner| -> Vec<Value> {
        curves
            .points
            .iter()
            .filter(|p| p.learner == learner)
            .map(|p| json!({"t": p.t, "biased": p.mean_vs_biased, "biased_se": p.se_vs_biased, "best": p.mean_vs_best, "best_se": p.se_vs_best}))
            .collect()
    };
    Ok(json!({"hedge": pick(Learner::Hedge), "bandit": pick(Learner::Bandit), "summary": curves.summary}))
}

/// Exhaustive sweep of all 4096 one-bit two-sample protocols at `d = 2`.
/// `family` is `"v1"` (dense) or `"v2"` (sparse).
pub fn kl_sweep_json(family: &str, rho: f64) -> Result<Value> {
    let family = match family {
        "v1" => HideSeekFamily::V1 { d: 2, rho },
        "v2" => HideSeekFamily::V2 { d: 2, rho },
        other => return Err(hideseek::Error::InvalidSpec(format!("unknown family {other:?}"))),
    };
    let rows = kl_bound_sweep(family)?;
    let mut bounds = Vec::new();
    for bound in [KlBound::DenseSingle, KlBound::DenseBatched, KlBound::Sparse] {
        let mine: Vec<_> = rows.iter().filter(|r| r.bound == bound && r.j == 0).collect();
        if mine.is_empty() {
            continue;
        }
        let mut lhs: Vec<f64> = mine.iter().map(|r| r.lhs).collect();
        lhs.sort_by(f64::total_cmp);
        bounds.push(json!({
            "bound": bound.name(),
            "rhs": mine[0].rhs,
            "lhs_sorted": lhs,
            "violations": mine.iter().filter(|r| !r.holds).count(),
            "min_margin": mine.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min),
        }));
    }
    Ok(json!({"protocols": 4096, "bounds": bounds}))
}

fn js(r: Result<Value>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn success_curve(d: usize, rho: f64, segment_size: usize, m_max: usize, points: usize, trials: usize, seed: u64) -> Result<String, JsError> {
    js(success_curve_json(d, rho, segment_size, m_max, points, trials, seed))
}

#[wasm_bindgen]
pub fn regret_curve(d: usize, horizon: usize, rho: f64, trials: usize, seed: u64) -> Result<String, JsError> {
    js(regret_curve_json(d, horizon, rho, trials, seed))
}

#[wasm_bindgen]
pub fn kl_sweep(family: &str, rho: f64) -> Result<String, JsError> {
    js(kl_sweep_json(family, rho))
}
