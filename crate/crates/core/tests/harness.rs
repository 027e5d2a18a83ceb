use hideseek::harness::{
    find_sample_threshold, read_report, run_experiment, run_regret_experiment, write_report, ExperimentConfig, ExperimentKind,
    FullInfoTask, Learner, RegretExperiment, SegmentScanTask,
};

#[test]
fn full_information_threshold_sits_below_the_union_bound() {
    let (d, rho) = (64usize, 0.1f64);
    let union = 2.0 * (2.0 * d as f64 * 10.0).ln() / (rho * rho);
    assert!((union - 1431.0).abs() < 1.0);
    let r = find_sample_threshold(&FullInfoTask { d, rho }, 0.9, 16, 8192, 300, 17).unwrap();
    let m = r.m_star as f64;
    assert!(m <= 1.1 * union && m >= union / union.ln(), "m* = {}", r.m_star);
}

#[test]
fn fewer_counters_need_more_samples() {
    let (d, rho) = (32usize, 0.25f64);
    let full = find_sample_threshold(&FullInfoTask { d, rho }, 0.8, 8, 16_384, 150, 4).unwrap();
    let scan = find_sample_threshold(&SegmentScanTask { d, rho, segment_size: 4, delta: None }, 0.8, 8, 16_384, 150, 4).unwrap();
    assert!(scan.m_star as f64 >= 4.0 * full.m_star as f64, "{} vs {}", scan.m_star, full.m_star);
}

#[test]
fn reports_survive_a_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for kind in [ExperimentKind::Stochopt, ExperimentKind::Enumerate] {
        let mut cfg = ExperimentConfig::default_for(kind);
        cfg.trials = cfg.trials.min(5);
        let report = run_experiment(&cfg).unwrap();
        let path = dir.path().join(format!("{}.csv", kind.name()));
        write_report(&report, &path).unwrap();
        assert_eq!(read_report(&path).unwrap(), report);
    }
}

#[test]
fn configs_round_trip_through_json() {
    for kind in ExperimentKind::ALL {
        let cfg = ExperimentConfig::default_for(kind);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }
}

#[test]
fn bandit_regret_grows_with_the_horizon() {
    let params = RegretExperiment { d: 8, horizon: 4000, rho: Some(0.2), c2: 5.9e-3, b: 1, checkpoints: 10, eta: None };
    let curves = run_regret_experiment(&params, 20, 8).unwrap();
    let bandit: Vec<_> = curves.points.iter().filter(|p| p.learner == Learner::Bandit).collect();
    for w in bandit.windows(2) {
        let slack = 3.0 * (w[0].se_vs_biased.powi(2) + w[1].se_vs_biased.powi(2)).sqrt();
        assert!(w[1].mean_vs_biased >= w[0].mean_vs_biased - slack, "{:?} then {:?}", w[0], w[1]);
    }
    assert!(bandit.last().unwrap().mean_vs_biased > bandit[0].mean_vs_biased);
}
