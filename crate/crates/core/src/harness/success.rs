//! Success-probability estimation and sample-threshold search for detectors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::par_map;
use super::stats::{wilson, Interval};
use crate::distributions::{HideSeekV1Spec, Instance, SparsePcaSpec};
use crate::error::{Error, Result};
use crate::estimators::{
    full_info_argmax, pair_count, pair_from_index, pca_plugin, Detection, SampleBudget, SegmentScan, SegmentSizing,
};
use crate::rng::{stream, Purpose, StreamRng};

/// A detector together with the distribution family it is run on.
///
/// `hidden` ranges over `0..num_hidden()` and names the planted coordinate or pair.
pub trait DetectionTask: Sync {
    fn name(&self) -> String;

    fn num_hidden(&self) -> usize;

    fn truth(&self, hidden: usize) -> Detection;

    /// One detection from a fresh sample of size `m`.
    fn run(&self, hidden: usize, m: usize, data: &mut StreamRng, protocol: &mut StreamRng) -> Result<Detection>;
}

fn dense_stream(d: usize, rho: f64, j: usize, rng: &mut StreamRng) -> Result<impl Iterator<Item = Instance> + '_> {
    let spec = HideSeekV1Spec::new(d, rho, Some(j))?;
    Ok(std::iter::repeat_with(move || spec.sample(rng)))
}

fn pca_stream(d: usize, rho: f64, hidden: usize, rng: &mut StreamRng) -> Result<impl Iterator<Item = Instance> + '_> {
    let spec = SparsePcaSpec::new(d, rho, pair_from_index(hidden, d))?;
    Ok(std::iter::repeat_with(move || spec.sample(rng)))
}

/// Empirical-mean argmax on dense hide-and-seek samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullInfoTask {
    pub d: usize,
    pub rho: f64,
}

impl DetectionTask for FullInfoTask {
    fn name(&self) -> String {
        "full_info".into()
    }

    fn num_hidden(&self) -> usize {
        self.d
    }

    fn truth(&self, hidden: usize) -> Detection {
        Detection::Coordinate { index: hidden }
    }

    fn run(&self, hidden: usize, m: usize, data: &mut StreamRng, _: &mut StreamRng) -> Result<Detection> {
        full_info_argmax(dense_stream(self.d, self.rho, hidden, data)?.take(m), self.d)
    }
}

/// Segment scan with a fixed segment width; `m` is split evenly across segments,
/// unless `delta` is set, in which case each segment takes its Hoeffding budget and `m` is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentScanTask {
    pub d: usize,
    pub rho: f64,
    pub segment_size: usize,
    pub delta: Option<f64>,
}

impl SegmentScanTask {
    pub fn scan(&self, m: usize) -> Result<SegmentScan> {
        let budget = match self.delta {
            Some(delta) => SampleBudget::Hoeffding { delta },
            None => SampleBudget::Total { m },
        };
        SegmentScan::dense(self.d, self.rho, SegmentSizing::Counters(self.segment_size), budget)
    }
}

impl DetectionTask for SegmentScanTask {
    fn name(&self) -> String {
        format!("segment_scan_{}", self.segment_size)
    }

    fn num_hidden(&self) -> usize {
        self.d
    }

    fn truth(&self, hidden: usize) -> Detection {
        Detection::Coordinate { index: hidden }
    }

    fn run(&self, hidden: usize, m: usize, data: &mut StreamRng, protocol: &mut StreamRng) -> Result<Detection> {
        self.scan(m)?.run(dense_stream(self.d, self.rho, hidden, data)?, protocol)
    }
}

/// Pair-product argmax on sparse-PCA samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcaPluginTask {
    pub d: usize,
    pub rho: f64,
}

impl DetectionTask for PcaPluginTask {
    fn name(&self) -> String {
        "pca_plugin".into()
    }

    fn num_hidden(&self) -> usize {
        pair_count(self.d)
    }

    fn truth(&self, hidden: usize) -> Detection {
        let (i, j) = pair_from_index(hidden, self.d);
        Detection::Pair { i, j }
    }

    fn run(&self, hidden: usize, m: usize, data: &mut StreamRng, _: &mut StreamRng) -> Result<Detection> {
        pca_plugin(pca_stream(self.d, self.rho, hidden, data)?.take(m), self.d)
    }
}

/// Segment scan over pair products with a fixed number of pair counters; `m` split evenly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairScanTask {
    pub d: usize,
    pub rho: f64,
    pub counters: usize,
}

impl DetectionTask for PairScanTask {
    fn name(&self) -> String {
        format!("pair_segment_scan_{}", self.counters)
    }

    fn num_hidden(&self) -> usize {
        pair_count(self.d)
    }

    fn truth(&self, hidden: usize) -> Detection {
        let (i, j) = pair_from_index(hidden, self.d);
        Detection::Pair { i, j }
    }

    fn run(&self, hidden: usize, m: usize, data: &mut StreamRng, protocol: &mut StreamRng) -> Result<Detection> {
        let scan = SegmentScan::pairs(self.d, self.rho, SegmentSizing::Counters(self.counters), SampleBudget::Total { m })?;
        scan.run(pca_stream(self.d, self.rho, hidden, data)?, protocol)
    }
}

/// A detector that ignores the data and is always right (or always wrong).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleTask {
    pub d: usize,
    pub correct: bool,
}

impl DetectionTask for OracleTask {
    fn name(&self) -> String {
        if self.correct { "oracle" } else { "anti_oracle" }.into()
    }

    fn num_hidden(&self) -> usize {
        self.d
    }

    fn truth(&self, hidden: usize) -> Detection {
        Detection::Coordinate { index: hidden }
    }

    fn run(&self, hidden: usize, _: usize, _: &mut StreamRng, _: &mut StreamRng) -> Result<Detection> {
        let index = if self.correct { hidden } else { (hidden + 1) % self.d.max(2) };
        Ok(Detection::Coordinate { index })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenTally {
    pub hidden: usize,
    pub trials: usize,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessEstimate {
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub p_hat: f64,
    pub ci: Interval,
    /// One entry per hidden value that was drawn at least once.
    pub per_hidden: Vec<HiddenTally>,
    /// Smallest per-hidden success rate among the values drawn.
    pub min_hidden: f64,
    /// Average of the per-hidden success rates.
    pub mean_hidden: f64,
}

/// Runs `trials` detections with sample size `m`. Trial `k` draws its hidden
/// value, data and protocol randomness from independent streams of `(seed, k)`,
/// so the same seed reuses the same randomness at every `m`.
pub fn estimate_success_prob<T: DetectionTask + ?Sized>(task: &T, m: usize, trials: usize, seed: u64) -> Result<SuccessEstimate> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let k = task.num_hidden();
    let outcomes = par_map(trials, |trial| -> Result<(usize, bool)> {
        let trial = trial as u64;
        let hidden = stream(seed, trial, Purpose::Hidden).random_range(0..k);
        let mut data = stream(seed, trial, Purpose::Data);
        let mut proto = stream(seed, trial, Purpose::Protocol);
        let det = task
            .run(hidden, m, &mut data, &mut proto)
            .map_err(|e| e.in_trial(format!("{} at m = {m}, trial {trial}", task.name())))?;
        Ok((hidden, det == task.truth(hidden)))
    });
    let mut counts = vec![(0usize, 0usize); k];
    for o in outcomes {
        let (hidden, ok) = o?;
        counts[hidden].0 += 1;
        counts[hidden].1 += usize::from(ok);
    }
    let per_hidden: Vec<HiddenTally> = counts
        .iter()
        .enumerate()
        .filter(|(_, c)| c.0 > 0)
        .map(|(hidden, &(trials, successes))| HiddenTally { hidden, trials, successes })
        .collect();
    let rates: Vec<f64> = per_hidden.iter().map(|t| t.successes as f64 / t.trials as f64).collect();
    let successes = per_hidden.iter().map(|t| t.successes).sum();
    Ok(SuccessEstimate {
        m,
        trials,
        successes,
        p_hat: successes as f64 / trials as f64,
        ci: wilson(successes, trials),
        per_hidden,
        min_hidden: rates.iter().copied().fold(f64::INFINITY, f64::min),
        mean_hidden: rates.iter().sum::<f64>() / rates.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub target: f64,
    /// Midpoint of the final bracket.
    pub m_star: usize,
    /// Largest probed size below target (equals `m_lo` when the target was already met there).
    pub lo: usize,
    /// Smallest probed size at or above target.
    pub hi: usize,
    /// Every probe in the order it was run.
    pub probes: Vec<SuccessEstimate>,
    /// Probe pairs where a larger `m` scored lower.
    pub monotonicity_violations: usize,
}

/// Bisects on `m` for the smallest sample size whose success rate reaches
/// `target`, until the bracket is within 10% of its lower end.
pub fn find_sample_threshold<T: DetectionTask + ?Sized>(
    task: &T,
    target: f64,
    m_lo: usize,
    m_hi: usize,
    trials: usize,
    seed: u64,
) -> Result<ThresholdResult> {
    if m_lo == 0 || m_lo > m_hi {
        return Err(Error::Config(format!("need 1 <= m_lo <= m_hi, got [{m_lo}, {m_hi}]")));
    }
    let mut probes = Vec::new();
    let at_lo = estimate_success_prob(task, m_lo, trials, seed)?;
    let p_lo = at_lo.p_hat;
    probes.push(at_lo);
    if p_lo >= target {
        return Ok(ThresholdResult { target, m_star: m_lo, lo: m_lo, hi: m_lo, probes, monotonicity_violations: 0 });
    }
    let at_hi = estimate_success_prob(task, m_hi, trials, seed)?;
    let p_hi = at_hi.p_hat;
    probes.push(at_hi);
    if p_hi < target {
        return Err(Error::TargetNotBracketed { target, m_lo, at_lo: p_lo, m_hi, at_hi: p_hi });
    }
    let (mut lo, mut hi) = (m_lo, m_hi);
    while hi - lo > 1 && (hi - lo) as f64 > 0.1 * lo as f64 {
        let mid = lo + (hi - lo) / 2;
        let est = estimate_success_prob(task, mid, trials, seed)?;
        if est.p_hat >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        probes.push(est);
    }
    let mut sorted: Vec<(usize, f64)> = probes.iter().map(|p| (p.m, p.p_hat)).collect();
    sorted.sort_by_key(|p| p.0);
    let monotonicity_violations =
        (0..sorted.len()).flat_map(|a| (a + 1..sorted.len()).map(move |b| (a, b))).filter(|&(a, b)| sorted[b].1 < sorted[a].1).count();
    Ok(ThresholdResult { target, m_star: lo + (hi - lo) / 2, lo, hi, probes, monotonicity_violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_detectors() {
        let est = estimate_success_prob(&OracleTask { d: 5, correct: true }, 1, 300, 1).unwrap();
        assert_eq!(est.p_hat, 1.0);
        assert_eq!(est.ci.hi, 1.0);
        assert_eq!(est.min_hidden, 1.0);
        let est = estimate_success_prob(&OracleTask { d: 5, correct: false }, 1, 300, 1).unwrap();
        assert_eq!(est.p_hat, 0.0);
        assert_eq!(est.per_hidden.iter().map(|t| t.trials).sum::<usize>(), 300);
    }

    #[test]
    fn oracle_threshold_is_lower_end() {
        let r = find_sample_threshold(&OracleTask { d: 5, correct: true }, 0.9, 7, 1000, 20, 1).unwrap();
        assert_eq!((r.m_star, r.lo, r.hi), (7, 7, 7));
    }

    #[test]
    fn unbracketed_target() {
        let r = find_sample_threshold(&OracleTask { d: 5, correct: false }, 0.9, 7, 1000, 20, 1);
        assert!(matches!(r, Err(Error::TargetNotBracketed { .. })));
    }

    #[test]
    fn estimates_are_reproducible() {
        let task = FullInfoTask { d: 16, rho: 0.1 };
        let a = estimate_success_prob(&task, 200, 60, 9).unwrap();
        let b = estimate_success_prob(&task, 200, 60, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bisection_brackets_target() {
        let task = FullInfoTask { d: 16, rho: 0.15 };
        let r = find_sample_threshold(&task, 0.8, 10, 2000, 100, 3).unwrap();
        let at = |m: usize| r.probes.iter().find(|p| p.m == m).unwrap().p_hat;
        assert!(at(r.lo) < 0.8 && at(r.hi) >= 0.8);
        assert!((r.hi - r.lo) as f64 <= 0.1 * r.lo as f64 || r.hi - r.lo <= 1);
        assert!(r.lo <= r.m_star && r.m_star <= r.hi);
    }
}
