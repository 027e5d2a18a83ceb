//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distributions::HideSeekFamily;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Default seed used by the CLI and the acceptance runs.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Hideseek,
    Regret,
    Sparsepca,
    Stochopt,
    Verify,
    Enumerate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Hideseek,
        ExperimentKind::Regret,
        ExperimentKind::Sparsepca,
        ExperimentKind::Stochopt,
        ExperimentKind::Verify,
        ExperimentKind::Enumerate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Hideseek => "hideseek",
            ExperimentKind::Regret => "regret",
            ExperimentKind::Sparsepca => "sparsepca",
            ExperimentKind::Stochopt => "stochopt",
            ExperimentKind::Verify => "verify",
            ExperimentKind::Enumerate => "enumerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Hideseek(HideSeekExperiment),
    Regret(RegretExperiment),
    Sparsepca(SparsePcaExperiment),
    Stochopt(StochOptExperiment),
    Verify(VerifyExperiment),
    Enumerate(EnumerateExperiment),
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::Hideseek(_) => ExperimentKind::Hideseek,
            Experiment::Regret(_) => ExperimentKind::Regret,
            Experiment::Sparsepca(_) => ExperimentKind::Sparsepca,
            Experiment::Stochopt(_) => ExperimentKind::Stochopt,
            Experiment::Verify(_) => ExperimentKind::Verify,
            Experiment::Enumerate(_) => ExperimentKind::Enumerate,
        }
    }
}

/// Detectors on the dense family. The hidden coordinate is drawn per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HideSeekExperiment {
    pub d: usize,
    pub rho: f64,
    pub algorithms: Vec<HideSeekAlgorithm>,
    pub budget: SampleSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum HideSeekAlgorithm {
    FullInfo,
    /// `delta` switches from an even split of `m` to the per-segment Hoeffding budget.
    SegmentScan { segment_size: usize, #[serde(default)] delta: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SampleSize {
    Fixed { m: usize },
    Threshold { target: f64, m_lo: usize, m_hi: usize },
}

/// Hedge against the one-bit learner on the biased-loss construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegretExperiment {
    pub d: usize,
    pub horizon: usize,
    /// Explicit bias; when absent, `c2 * min(1/4, sqrt(d / (b T)))`.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default = "default_c2")]
    pub c2: f64,
    #[serde(default = "default_bits")]
    pub b: usize,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    /// Hedge rate; defaults to `sqrt(8 ln d / T)`.
    #[serde(default)]
    pub eta: Option<f64>,
}

fn default_c2() -> f64 {
    5.9e-3
}

fn default_bits() -> usize {
    1
}

fn default_checkpoints() -> usize {
    20
}

impl RegretExperiment {
    pub fn rho(&self) -> f64 {
        self.rho.unwrap_or_else(|| self.c2 * (0.25f64).min((self.d as f64 / (self.b as f64 * self.horizon as f64)).sqrt()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparsePcaExperiment {
    pub d: usize,
    pub rho: f64,
    /// Sample size; when absent, `ceil(6 ln(10 d^2) / tau^2)`.
    #[serde(default)]
    pub m: Option<usize>,
    pub algorithms: Vec<PcaAlgorithm>,
}

impl SparsePcaExperiment {
    pub fn m(&self) -> usize {
        self.m.unwrap_or_else(|| plugin_budget(self.d, self.rho))
    }
}

/// `ceil(6 ln(10 d^2) / tau^2)` with `tau = 2 rho / (d - 1)`.
pub fn plugin_budget(d: usize, rho: f64) -> usize {
    let tau = 2.0 * rho / (d as f64 - 1.0);
    (6.0 * (10.0 * (d * d) as f64).ln() / (tau * tau)).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum PcaAlgorithm {
    Plugin,
    PairScan { counters: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochOptExperiment {
    pub d: usize,
    pub beta: f64,
    pub m: usize,
    /// Biased entry; drawn per trial when absent.
    #[serde(default)]
    pub pair: Option<(usize, usize)>,
    /// Trials pass when the gaps are at most `bound_constant * sqrt(ln d / m)`.
    #[serde(default = "default_bound_constant")]
    pub bound_constant: f64,
}

fn default_bound_constant() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyExperiment {
    #[serde(default = "default_lemma7_cases")]
    pub lemma7_cases: usize,
    #[serde(default = "default_property_cases")]
    pub property_cases: usize,
    #[serde(default = "default_balls_bins_trials")]
    pub balls_bins_trials: usize,
    #[serde(default = "default_lemma2_protocols")]
    pub lemma2_protocols: usize,
}

fn default_lemma7_cases() -> usize {
    1000
}

fn default_property_cases() -> usize {
    10_000
}

fn default_balls_bins_trials() -> usize {
    100_000
}

fn default_lemma2_protocols() -> usize {
    200
}

impl Default for VerifyExperiment {
    fn default() -> Self {
        Self {
            lemma7_cases: default_lemma7_cases(),
            property_cases: default_property_cases(),
            balls_bins_trials: default_balls_bins_trials(),
            lemma2_protocols: default_lemma2_protocols(),
        }
    }
}

/// Exhaustive KL-bound sweep over all deterministic `(1, 1, 2)` protocols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerateExperiment {
    pub family: HideSeekFamily,
}

impl ExperimentConfig {
    /// The default setting for each kind (the acceptance settings).
    pub fn default_for(kind: ExperimentKind) -> Self {
        let (experiment, trials) = match kind {
            ExperimentKind::Hideseek => (
                Experiment::Hideseek(HideSeekExperiment {
                    d: 256,
                    rho: 0.2,
                    algorithms: vec![
                        HideSeekAlgorithm::FullInfo,
                        HideSeekAlgorithm::SegmentScan { segment_size: 16, delta: None },
                    ],
                    budget: SampleSize::Threshold { target: 0.9, m_lo: 16, m_hi: 32_768 },
                }),
                200,
            ),
            ExperimentKind::Regret => (
                Experiment::Regret(RegretExperiment {
                    d: 32,
                    horizon: 20_000,
                    rho: None,
                    c2: default_c2(),
                    b: 1,
                    checkpoints: default_checkpoints(),
                    eta: None,
                }),
                50,
            ),
            ExperimentKind::Sparsepca => (
                Experiment::Sparsepca(SparsePcaExperiment { d: 9, rho: 0.25, m: Some(10_310), algorithms: vec![PcaAlgorithm::Plugin] }),
                100,
            ),
            ExperimentKind::Stochopt => (
                Experiment::Stochopt(StochOptExperiment { d: 32, beta: 0.0, m: 10_000, pair: None, bound_constant: 4.0 }),
                100,
            ),
            ExperimentKind::Verify => (Experiment::Verify(VerifyExperiment::default()), 1),
            ExperimentKind::Enumerate => (Experiment::Enumerate(EnumerateExperiment { family: HideSeekFamily::V1 { d: 2, rho: 0.1 } }), 1),
        };
        Self { schema_version: SCHEMA_VERSION, experiment, trials, seed: DEFAULT_SEED, out: None, threads: None }
    }

    pub fn kind(&self) -> ExperimentKind {
        self.experiment.kind()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        match &self.experiment {
            Experiment::Hideseek(h) => {
                if h.algorithms.is_empty() {
                    return bad("hideseek needs at least one algorithm".into());
                }
                if h.d == 0 || !(h.rho > 0.0 && h.rho <= 0.5) {
                    return bad(format!("hideseek needs d >= 1 and rho in (0, 1/2], got d = {}, rho = {}", h.d, h.rho));
                }
                for a in &h.algorithms {
                    if let HideSeekAlgorithm::SegmentScan { segment_size, delta } = a {
                        if *segment_size == 0 {
                            return bad("segment_size must be at least 1".into());
                        }
                        if delta.is_some() && matches!(h.budget, SampleSize::Threshold { .. }) {
                            return bad("a Hoeffding segment budget fixes m, so it cannot be used with a threshold search".into());
                        }
                    }
                }
                if let SampleSize::Threshold { target, m_lo, m_hi } = h.budget {
                    if !(0.0..=1.0).contains(&target) || m_lo == 0 || m_lo > m_hi {
                        return bad(format!("threshold search needs target in [0, 1] and 1 <= m_lo <= m_hi, got {target}, [{m_lo}, {m_hi}]"));
                    }
                }
            }
            Experiment::Regret(r) => {
                if r.d == 0 || r.horizon == 0 || r.b == 0 || r.checkpoints == 0 {
                    return bad("regret needs d, horizon, b and checkpoints >= 1".into());
                }
                if !(0.0..=0.25).contains(&r.rho()) {
                    return bad(format!("regret bias {} outside [0, 1/4]", r.rho()));
                }
            }
            Experiment::Sparsepca(s) => {
                if s.algorithms.is_empty() {
                    return bad("sparsepca needs at least one algorithm".into());
                }
                if s.d < 2 || !(s.rho > 0.0 && s.rho < 0.5) {
                    return bad(format!("sparsepca needs d >= 2 and rho in (0, 1/2), got d = {}, rho = {}", s.d, s.rho));
                }
            }
            Experiment::Stochopt(s) => {
                if s.d == 0 || s.m == 0 || !(-1.0..=1.0).contains(&s.beta) {
                    return bad("stochopt needs d, m >= 1 and beta in [-1, 1]".into());
                }
                if let Some((i, j)) = s.pair {
                    if i >= s.d || j >= s.d {
                        return bad(format!("entry ({i}, {j}) outside a {0}x{0} matrix", s.d));
                    }
                }
            }
            Experiment::Verify(_) => {}
            Experiment::Enumerate(e) => {
                if e.family.alphabet_size() != 4 {
                    return bad("the enumeration sweep needs a 4-letter alphabet (d = 2 dense, or d = 2 sparse)".into());
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_roundtrip() {
        for kind in ExperimentKind::ALL {
            let cfg = ExperimentConfig::default_for(kind);
            cfg.validate().unwrap();
            assert_eq!(cfg.kind(), kind);
            let json = serde_json::to_string_pretty(&cfg).unwrap();
            assert_eq!(ExperimentConfig::from_json(&json).unwrap(), cfg);
        }
    }

    #[test]
    fn regret_recipe_bias() {
        let Experiment::Regret(r) = ExperimentConfig::default_for(ExperimentKind::Regret).experiment else { unreachable!() };
        let expected = 5.9e-3 * (32.0f64 / 20_000.0).sqrt();
        assert!((r.rho() - expected).abs() < 1e-15);
    }

    #[test]
    fn plugin_budget_formula() {
        // tau = 1/16 at d = 9, rho = 1/4
        let expected = (6.0 * 810f64.ln() * 256.0).ceil() as usize;
        assert_eq!(plugin_budget(9, 0.25), expected);
        assert_eq!(expected, 10_287);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = ExperimentConfig::default_for(ExperimentKind::Stochopt);
        cfg.trials = 0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = ExperimentConfig::default_for(ExperimentKind::Stochopt);
        cfg.schema_version = 99;
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_json(r#"{"schema_version":1,"experiment":{"kind":"bogus"},"trials":1,"seed":0}"#).is_err());
        assert!(ExperimentConfig::from_json("not json").is_err());
    }

    #[test]
    fn minimal_json() {
        let cfg = ExperimentConfig::from_json(
            r#"{"schema_version":1,"trials":3,"seed":7,
                "experiment":{"kind":"regret","d":4,"horizon":100}}"#,
        )
        .unwrap();
        let Experiment::Regret(r) = cfg.experiment else { unreachable!() };
        assert_eq!((r.b, r.checkpoints, r.c2), (1, 20, 5.9e-3));
    }
}
