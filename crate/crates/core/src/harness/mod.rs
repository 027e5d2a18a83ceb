//! Experiment orchestration: configs, Monte Carlo estimates, verification and reports.
//!
//! Trials are independent and may run in parallel; each draws its randomness
//! from streams addressed by `(seed, trial)`, and results are collected in trial
//! order, so output does not depend on the thread count.

mod config;
mod regret;
mod report;
mod run;
mod stats;
mod success;
mod verify;

pub use config::{
    plugin_budget, EnumerateExperiment, Experiment, ExperimentConfig, ExperimentKind, HideSeekAlgorithm, HideSeekExperiment,
    PcaAlgorithm, RegretExperiment, SampleSize, SparsePcaExperiment, StochOptExperiment, VerifyExperiment, DEFAULT_SEED,
    SCHEMA_VERSION,
};
pub use regret::{checkpoint_grid, run_regret_experiment, CurvePoint, Learner, RegretCurves, RegretSummary};
pub use report::{read_report, sidecar_path, write_report, ExperimentReport};
pub use run::{run_experiment, ENUMERATE_COLUMNS, REGRET_COLUMNS, STOCHOPT_COLUMNS, SUCCESS_COLUMNS, VERIFY_COLUMNS};
pub use stats::{mean_se, wilson, Interval, Z95};
pub use success::{
    estimate_success_prob, find_sample_threshold, DetectionTask, FullInfoTask, HiddenTally, OracleTask, PairScanTask,
    PcaPluginTask, SegmentScanTask, SuccessEstimate, ThresholdResult,
};
pub use verify::{run_verify_suite, CheckRow, GroupSummary, VerifyReport, EXACT_TOL, REQUIRED_GROUPS};

/// `f(0), f(1), ..., f(n - 1)`, computed in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
