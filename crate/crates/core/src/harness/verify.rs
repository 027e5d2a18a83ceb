//! The lemma and bound verification suite.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::VerifyExperiment;
use crate::distributions::{HideSeekFamily, Instance};
use crate::error::Result;
use crate::infotheory::{
    avg_info_budget, balls_bins_moment, dragomir_check, kl, lemma2_bound, random_pmf, total_variation, Base, JointPmf,
};
use crate::protocol::{enumerate_transcripts, kl_bound_sweep, DeterministicProtocol, Message, ProtocolSpec};
use crate::rng::{stream, Purpose, StreamRng};

/// Exact checks fail below this margin.
pub const EXACT_TOL: f64 = 1e-9;

/// Every check group the suite must exercise.
pub const REQUIRED_GROUPS: [&str; 11] = [
    "lemma2",
    "lemma4",
    "lemma5",
    "lemma6",
    "lemma7",
    "pinsker",
    "log_sum",
    "chain_rule",
    "joint_convexity",
    "kl_sweep_dense",
    "kl_sweep_sparse",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub group: String,
    pub case_id: String,
    pub quantity: String,
    pub value: f64,
    pub bound: f64,
    /// `bound - value`.
    pub margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub cases: usize,
    pub violations: usize,
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub rows: Vec<CheckRow>,
    pub groups: BTreeMap<String, GroupSummary>,
    /// Required groups that produced no rows.
    pub missing: Vec<String>,
    pub all_hold: bool,
}

struct Suite {
    rows: Vec<CheckRow>,
}

impl Suite {
    /// Records `value <= bound`; `tol` is the slack allowed for rounding.
    fn check(&mut self, group: &str, case_id: String, quantity: &str, value: f64, bound: f64, tol: f64) {
        let margin = bound - value;
        self.rows.push(CheckRow {
            group: group.into(),
            case_id,
            quantity: quantity.into(),
            value,
            bound,
            margin,
            holds: margin >= -tol,
        });
    }
}

/// Deterministic `(b, 1, 2)` protocol on the dense family given by random tables,
/// with a table-driven coordinate estimate as output.
struct RandomTable {
    b: usize,
    first: Vec<u64>,
    second: Vec<u64>,
    out: Vec<usize>,
}

impl RandomTable {
    fn new(d: usize, b: usize, rng: &mut StreamRng) -> Self {
        let k = 1usize << d;
        let w = 1usize << b;
        Self {
            b,
            first: (0..k).map(|_| rng.random_range(0..w as u64)).collect(),
            second: (0..k * w).map(|_| rng.random_range(0..w as u64)).collect(),
            out: (0..w * w).map(|_| rng.random_range(0..d)).collect(),
        }
    }

    fn code(x: &Instance) -> usize {
        x.as_dense().expect("dense family").iter().enumerate().fold(0, |acc, (i, &s)| acc | (usize::from(s > 0) << i))
    }
}

impl DeterministicProtocol for RandomTable {
    type Output = usize;

    fn message(&self, round: usize, batch: &[Instance], history: &[Message]) -> Message {
        let x = Self::code(&batch[0]);
        let w = 1usize << self.b;
        let v = match round {
            0 => self.first[x],
            _ => self.second[x * w + history[0].reader().read_uint(self.b) as usize],
        };
        Message::from_uint(v, self.b)
    }

    fn output(&self, history: &[Message]) -> usize {
        let w1 = history[0].reader().read_uint(self.b) as usize;
        let w2 = history[1].reader().read_uint(self.b) as usize;
        self.out[(w1 << self.b) | w2]
    }
}

fn lemma2(suite: &mut Suite, protocols: usize, rng: &mut StreamRng) -> Result<()> {
    let (d, b, rho) = (4, 2, 0.05);
    let family = HideSeekFamily::V1 { d, rho };
    let spec = ProtocolSpec::new(b, 1, 2)?;
    for case in 0..protocols {
        let p = RandomTable::new(d, b, rng);
        let reference = enumerate_transcripts(&p, spec, family, None)?;
        let mut kls = Vec::with_capacity(d);
        let mut detect = Vec::with_capacity(d);
        for j in 0..d {
            let hidden = enumerate_transcripts(&p, spec, family, Some(j))?;
            let (p0, pj) = reference.aligned(&hidden, Base::Nats)?;
            kls.push(kl(&p0, &pj)?);
            detect.push(hidden.probs.iter().filter(|(w, _)| p.output(w) == j).map(|(_, q)| q).sum::<f64>());
        }
        let bound = lemma2_bound(&kls)?;
        let worst = detect.iter().copied().fold(f64::INFINITY, f64::min);
        suite.check("lemma2", format!("table_{case}"), "min_j Pr_j(J=j)", worst, bound.bound, EXACT_TOL);
    }
    Ok(())
}

fn dragomir_and_pinsker(suite: &mut Suite, cases: usize, rng: &mut StreamRng) -> Result<()> {
    for case in 0..cases {
        let k = rng.random_range(2..=8);
        let p = random_pmf(k, rng);
        let q = random_pmf(k, rng);
        let r = dragomir_check(&p, &q)?;
        let id = format!("pair_{case}");
        suite.check("lemma4", id.clone(), "kl_pq <= c kl_qp", r.kl_pq, r.c * r.kl_qp, EXACT_TOL);
        suite.check("lemma5", id.clone(), "kl_pq <= chi2_pq", r.kl_pq, r.chi2_pq, EXACT_TOL);
        suite.check("lemma5", id.clone(), "chi2_pq <= 2c kl_pq", r.chi2_pq, 2.0 * r.c * r.kl_pq, EXACT_TOL);
        let tv = total_variation(&p, &q)?;
        suite.check("pinsker", id, "l1 <= sqrt(2 kl)", tv, (2.0 * r.kl_pq).sqrt(), EXACT_TOL);
    }
    Ok(())
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

fn log_sum(suite: &mut Suite, cases: usize, rng: &mut StreamRng) {
    for case in 0..cases {
        let k = rng.random_range(1..=8);
        let a: Vec<f64> = (0..k).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() * 10.0 }).collect();
        let b: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * 10.0 + 1e-6).collect();
        let lhs = xlogy(a.iter().sum(), b.iter().sum());
        let rhs: f64 = a.iter().zip(&b).map(|(&x, &y)| xlogy(x, y)).sum();
        suite.check("log_sum", format!("vec_{case}"), "sum a ln(sum a / sum b) <= sum a ln(a/b)", lhs, rhs, EXACT_TOL);
    }
}

fn chain_and_convexity(suite: &mut Suite, cases: usize, rng: &mut StreamRng) -> Result<()> {
    for case in 0..cases {
        let k = rng.random_range(2..=6);
        let (p1, q1, p2, q2) = (random_pmf(k, rng), random_pmf(k, rng), random_pmf(k, rng), random_pmf(k, rng));
        let lambda: f64 = rng.random();
        let lhs = kl(&p1.mix(&p2, lambda)?, &q1.mix(&q2, lambda)?)?;
        let rhs = lambda * kl(&p1, &q1)? + (1.0 - lambda) * kl(&p2, &q2)?;
        suite.check("joint_convexity", format!("tuple_{case}"), "kl of mixtures <= mixture of kls", lhs, rhs, EXACT_TOL);
        if case < cases / 10 {
            let joint = kl(&p1.product(&p2)?, &q1.product(&q2)?)?;
            let sum = kl(&p1, &q1)? + kl(&p2, &q2)?;
            suite.check("chain_rule", format!("tuple_{case}"), "|kl(product) - sum of kls|", (joint - sum).abs(), 1e-12 * sum.max(1.0), 0.0);
        }
    }
    Ok(())
}

/// `Z_1..Z_3` independent bits with random biases; `W` is a random map of `Z`
/// into `2^b` values followed by a random channel.
fn lemma7(suite: &mut Suite, cases: usize, rng: &mut StreamRng) -> Result<()> {
    let d = 3;
    for case in 0..cases {
        let b = 1 + case % 2;
        let w = 1usize << b;
        let biases: Vec<f64> = (0..d).map(|_| rng.random()).collect();
        let f: Vec<usize> = (0..1 << d).map(|_| rng.random_range(0..w)).collect();
        let channel: Vec<Vec<f64>> = (0..w).map(|_| random_pmf(w, rng).probs().to_vec()).collect();
        let mut probs = vec![0.0; w << d];
        for z in 0..1usize << d {
            let pz: f64 = (0..d).map(|i| if (z >> (d - 1 - i)) & 1 == 1 { biases[i] } else { 1.0 - biases[i] }).product();
            for (wv, &c) in channel[f[z]].iter().enumerate() {
                probs[(wv << d) | z] += pz * c;
            }
        }
        let mut shape = vec![w];
        shape.extend(std::iter::repeat_n(2, d));
        let joint = JointPmf::new(shape, probs, Base::Bits)?;
        let r = avg_info_budget(&joint, b)?;
        suite.check("lemma7", format!("channel_{case}_b{b}"), "avg I(W;Z_j) bits", r.value_bits, r.bound_bits, EXACT_TOL);
    }
    Ok(())
}

fn lemma6(suite: &mut Suite, trials: usize, rng: &mut StreamRng) {
    let est = balls_bins_moment(12, 8, 1.0 / 6.0, trials, rng);
    suite.check("lemma6", "n12_d8_eps1/6".into(), "E[exp(eps max K)] + 3 se", est.mean + 3.0 * est.std_error, 13.0, 0.0);
}

fn sweep(suite: &mut Suite, group: &str, family: HideSeekFamily) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for row in kl_bound_sweep(family)? {
        if seen.insert((row.protocol_id, row.bound.name())) {
            suite.check(group, format!("protocol_{}", row.protocol_id), row.bound.name(), row.lhs, row.rhs, EXACT_TOL);
        }
    }
    Ok(())
}

/// Runs every check. Failures are reported in the result, never as errors;
/// errors mean a check could not be evaluated.
pub fn run_verify_suite(params: &VerifyExperiment, seed: u64) -> Result<VerifyReport> {
    let mut suite = Suite { rows: Vec::new() };
    let rng = |k: u64| stream(seed, k, Purpose::Aux);
    lemma2(&mut suite, params.lemma2_protocols, &mut rng(0))?;
    dragomir_and_pinsker(&mut suite, params.property_cases, &mut rng(1))?;
    log_sum(&mut suite, params.property_cases, &mut rng(2));
    chain_and_convexity(&mut suite, params.property_cases, &mut rng(3))?;
    lemma7(&mut suite, params.lemma7_cases, &mut rng(4))?;
    lemma6(&mut suite, params.balls_bins_trials, &mut rng(5));
    sweep(&mut suite, "kl_sweep_dense", HideSeekFamily::V1 { d: 2, rho: 0.1 })?;
    sweep(&mut suite, "kl_sweep_sparse", HideSeekFamily::V2 { d: 2, rho: 1.0 / 27.0 })?;

    let mut groups: BTreeMap<String, GroupSummary> = BTreeMap::new();
    for r in &suite.rows {
        let g = groups.entry(r.group.clone()).or_insert(GroupSummary { cases: 0, violations: 0, min_margin: f64::INFINITY });
        g.cases += 1;
        g.violations += usize::from(!r.holds);
        g.min_margin = g.min_margin.min(r.margin);
    }
    let missing: Vec<String> =
        REQUIRED_GROUPS.iter().filter(|g| groups.get(**g).is_none_or(|s| s.cases == 0)).map(|g| g.to_string()).collect();
    let all_hold = missing.is_empty() && suite.rows.iter().all(|r| r.holds);
    Ok(VerifyReport { rows: suite.rows, groups, missing, all_hold })
}
