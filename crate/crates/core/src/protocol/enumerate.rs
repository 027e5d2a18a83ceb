//! Exact transcript distributions of deterministic protocols on finite alphabets.
//!
//! Instead of walking all `|X|^(n m)` input sequences, the distribution is
//! propagated round by round over message prefixes: since round `t` depends on
//! the batch and the previous messages only, this gives the same pmf.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DeterministicProtocol, Message, ProtocolSpec};
use crate::distributions::{HideSeekFamily, Instance};
use crate::error::{Error, Result};
use crate::infotheory::{kl, Base, Pmf};

pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 24;

/// Exact pmf over message sequences `(W^1, ..., W^m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptPmf {
    pub probs: BTreeMap<Vec<Message>, f64>,
}

impl TranscriptPmf {
    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    pub fn prob(&self, messages: &[Message]) -> f64 {
        self.probs.get(messages).copied().unwrap_or(0.0)
    }

    /// Both pmfs over the union of their supports, in a shared order.
    pub fn aligned(&self, other: &TranscriptPmf, base: Base) -> Result<(Pmf, Pmf)> {
        let mut keys: Vec<&Vec<Message>> = self.probs.keys().chain(other.probs.keys()).collect();
        keys.sort();
        keys.dedup();
        let a = keys.iter().map(|k| self.prob(k)).collect();
        let b = keys.iter().map(|k| other.prob(k)).collect();
        Ok((Pmf::new(a, base)?, Pmf::new(b, base)?))
    }
}

pub fn enumerate_transcripts<P: DeterministicProtocol + ?Sized>(
    protocol: &P,
    spec: ProtocolSpec,
    family: HideSeekFamily,
    j: Option<usize>,
) -> Result<TranscriptPmf> {
    enumerate_transcripts_with_cap(protocol, spec, family, j, DEFAULT_ENUMERATION_CAP)
}

fn input_space(alphabet: u128, count: usize) -> u128 {
    (0..count).try_fold(1u128, |acc, _| acc.checked_mul(alphabet)).unwrap_or(u128::MAX)
}

pub fn enumerate_transcripts_with_cap<P: DeterministicProtocol + ?Sized>(
    protocol: &P,
    spec: ProtocolSpec,
    family: HideSeekFamily,
    j: Option<usize>,
    cap: u128,
) -> Result<TranscriptPmf> {
    let size = input_space(family.alphabet_size(), spec.instances());
    if size > cap {
        return Err(Error::EnumerationTooLarge { size, cap });
    }
    let alphabet = family.alphabet();
    let pmf = family.alphabet_pmf(j)?;

    // every batch of n instances with its probability
    let k = alphabet.len();
    let mut batches: Vec<(Vec<Instance>, f64)> = Vec::with_capacity(k.pow(spec.n as u32));
    let mut idx = vec![0usize; spec.n];
    loop {
        let prob: f64 = idx.iter().map(|&i| pmf[i]).product();
        if prob > 0.0 {
            batches.push((idx.iter().map(|&i| alphabet[i].clone()).collect(), prob));
        }
        let mut pos = spec.n;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < k {
                break;
            }
            idx[pos] = 0;
        }
        if idx.iter().all(|&i| i == 0) {
            break;
        }
    }

    let mut frontier: BTreeMap<Vec<Message>, f64> = BTreeMap::from([(Vec::new(), 1.0)]);
    for round in 0..spec.m {
        let mut next = BTreeMap::new();
        for (prefix, p) in &frontier {
            for (batch, q) in &batches {
                let msg = protocol.message(round, batch, prefix);
                if msg.len() > spec.b {
                    return Err(Error::BudgetExceeded { round, len: msg.len(), budget: spec.b });
                }
                let mut key = prefix.clone();
                key.push(msg);
                *next.entry(key).or_insert(0.0) += p * q;
            }
        }
        frontier = next;
    }
    Ok(TranscriptPmf { probs: frontier })
}

/// The right-hand sides the transcript KL is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlBound {
    /// `51 m n 2^n rho^2 b / d` for `(b, 1, m)` protocols on the dense family, `rho <= 1/4`.
    DenseSingle,
    /// `min(60 m n rho b / d, 6 m n rho^2)` on the dense family, `rho <= 1/(4n)`.
    DenseBatched,
    /// `26 m b / d` on the sparse family, `rho <= min(1/27, 1/(9 ln d), d/(14 n))`.
    Sparse,
}

impl KlBound {
    pub fn name(&self) -> &'static str {
        match self {
            KlBound::DenseSingle => "dense_single",
            KlBound::DenseBatched => "dense_batched",
            KlBound::Sparse => "sparse",
        }
    }

    /// Largest admissible rho, or `None` if the bound does not apply to this family / batch size.
    pub fn rho_limit(&self, family: &HideSeekFamily, n: usize) -> Option<f64> {
        match (self, family) {
            (KlBound::DenseSingle, HideSeekFamily::V1 { .. }) if n == 1 => Some(0.25),
            (KlBound::DenseBatched, HideSeekFamily::V1 { .. }) => Some(1.0 / (4.0 * n as f64)),
            (KlBound::Sparse, HideSeekFamily::V2 { d, .. }) => {
                let d = *d as f64;
                Some((1.0f64 / 27.0).min(1.0 / (9.0 * d.ln())).min(d / (14.0 * n as f64)))
            }
            _ => None,
        }
    }

    pub fn rhs(&self, spec: ProtocolSpec, d: usize, rho: f64) -> f64 {
        let (b, n, m, d) = (spec.b as f64, spec.n as f64, spec.m as f64, d as f64);
        match self {
            KlBound::DenseSingle => 51.0 * m * n * 2f64.powf(n) * rho * rho * b / d,
            KlBound::DenseBatched => (60.0 * m * n * rho * b / d).min(6.0 * m * n * rho * rho),
            KlBound::Sparse => 26.0 * m * b / d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub bound: KlBound,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlBoundReport {
    /// `KL(Pr_0 || Pr_j)` of the transcript, nats, for each hidden `j`.
    pub per_j: Vec<f64>,
    /// `(2/d) sum_j KL(Pr_0 || Pr_j)`.
    pub lhs: f64,
    pub checks: Vec<BoundCheck>,
    pub holds: bool,
}

const BOUND_TOL: f64 = 1e-9;

/// Computes the averaged transcript KL exactly and compares it with every
/// bound that applies to `family` at this `rho` and batch size.
pub fn transcript_kl_bound_check<P: DeterministicProtocol + ?Sized>(
    protocol: &P,
    spec: ProtocolSpec,
    family: HideSeekFamily,
) -> Result<KlBoundReport> {
    let (d, rho) = (family.d(), family.rho());
    if d < 2 {
        return Err(Error::InvalidSpec("KL bounds need d > 1".into()));
    }
    let applicable: Vec<KlBound> = [KlBound::DenseSingle, KlBound::DenseBatched, KlBound::Sparse]
        .into_iter()
        .filter(|b| b.rho_limit(&family, spec.n).is_some_and(|lim| rho <= lim))
        .collect();
    if applicable.is_empty() {
        let (bound, max) = [KlBound::DenseSingle, KlBound::DenseBatched, KlBound::Sparse]
            .into_iter()
            .filter_map(|b| b.rho_limit(&family, spec.n).map(|lim| (b.name(), lim)))
            .fold(("none", 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        return Err(Error::RhoOutOfRange { rho, max, bound });
    }

    let reference = enumerate_transcripts(protocol, spec, family, None)?;
    let per_j = (0..d)
        .map(|j| {
            let hidden = enumerate_transcripts(protocol, spec, family, Some(j))?;
            let (p0, pj) = reference.aligned(&hidden, Base::Nats)?;
            kl(&p0, &pj)
        })
        .collect::<Result<Vec<f64>>>()?;
    let lhs = 2.0 / d as f64 * per_j.iter().sum::<f64>();
    let checks: Vec<BoundCheck> = applicable
        .into_iter()
        .map(|bound| {
            let rhs = bound.rhs(spec, d, rho);
            BoundCheck { bound, rhs, margin: rhs - lhs, holds: lhs <= rhs + BOUND_TOL }
        })
        .collect();
    let holds = checks.iter().all(|c| c.holds);
    Ok(KlBoundReport { per_j, lhs, checks, holds })
}

/// A deterministic one-instance-per-round protocol given by lookup tables:
/// round 0 emits bit `first[x]`, round 1 emits bit `second[x, w1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableProtocol {
    family: HideSeekFamily,
    first: u64,
    second: u64,
}

impl TableProtocol {
    /// `first` indexes the alphabet; `second` is indexed by `2 x + w1`.
    pub fn new(family: HideSeekFamily, first: u64, second: u64) -> Self {
        Self { family, first, second }
    }

    pub fn spec() -> ProtocolSpec {
        ProtocolSpec { b: 1, n: 1, m: 2 }
    }

    fn index(&self, x: &Instance) -> usize {
        match (self.family, x) {
            (HideSeekFamily::V1 { .. }, Instance::DenseSign(v)) => {
                v.iter().enumerate().fold(0, |acc, (i, &s)| acc | (usize::from(s > 0) << i))
            }
            (HideSeekFamily::V2 { .. }, Instance::SparsePair(s)) => {
                let (axis, v) = s.entries().next().expect("one entry");
                2 * axis + usize::from(v < 0.0)
            }
            _ => panic!("instance does not belong to the protocol's family"),
        }
    }
}

impl DeterministicProtocol for TableProtocol {
    type Output = (u64, u64);

    fn message(&self, round: usize, batch: &[Instance], history: &[Message]) -> Message {
        let x = self.index(&batch[0]);
        let bit = match round {
            0 => (self.first >> x) & 1,
            _ => {
                let w1 = u64::from(history[0].get(0));
                (self.second >> (2 * x as u64 + w1)) & 1
            }
        };
        Message::bit(bit == 1)
    }

    fn output(&self, _history: &[Message]) -> (u64, u64) {
        (self.first, self.second)
    }
}

/// One row per `(protocol, j)` of the exhaustive sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub protocol_id: u64,
    pub j: usize,
    pub kl_nats: f64,
    pub lhs: f64,
    pub bound: KlBound,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

/// Every deterministic `(1, 1, 2)` protocol on a family with a 4-letter
/// alphabet: 16 first-round maps times 256 second-round maps.
pub fn kl_bound_sweep(family: HideSeekFamily) -> Result<Vec<SweepRow>> {
    let k = family.alphabet_size();
    if k != 4 {
        return Err(Error::InvalidSpec(format!("sweep expects a 4-letter alphabet, got {k}")));
    }
    let mut rows = Vec::new();
    for first in 0..16u64 {
        for second in 0..256u64 {
            let protocol_id = first * 256 + second;
            let report = transcript_kl_bound_check(&TableProtocol::new(family, first, second), TableProtocol::spec(), family)?;
            for (j, &kl_nats) in report.per_j.iter().enumerate() {
                for c in &report.checks {
                    rows.push(SweepRow {
                        protocol_id,
                        j,
                        kl_nats,
                        lhs: report.lhs,
                        bound: c.bound,
                        rhs: c.rhs,
                        margin: c.margin,
                        holds: c.holds,
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{run_protocol, Deterministic, FnProtocol};
    use crate::rng::{stream, Purpose};

    fn sign_of(coord: usize) -> impl Fn(usize, &[Instance], &[Message]) -> Message {
        move |_, batch, _| Message::bit(batch[0].as_dense().unwrap()[coord] > 0)
    }

    #[test]
    fn single_bit_indicator_under_reference() {
        let fam = HideSeekFamily::V1 { d: 1, rho: 0.25 };
        let pmf = enumerate_transcripts(&FnProtocol(sign_of(0)), ProtocolSpec { b: 1, n: 1, m: 1 }, fam, None).unwrap();
        assert_eq!(pmf.prob(&[Message::bit(true)]), 0.5);
        assert_eq!(pmf.prob(&[Message::bit(false)]), 0.5);
    }

    #[test]
    fn normalization_across_protocols() {
        let fam = HideSeekFamily::V1 { d: 3, rho: 0.2 };
        let spec = ProtocolSpec { b: 2, n: 2, m: 3 };
        let p = FnProtocol(|round: usize, batch: &[Instance], hist: &[Message]| {
            let a = batch[0].as_dense().unwrap();
            let b = batch[1].as_dense().unwrap();
            let prev = hist.last().map_or(0, |m| m.reader().read_uint(m.len()));
            Message::from_uint(((a[round % 3] + b[0] + 2) as u64 / 2 + prev) % 4, 2)
        });
        for j in [None, Some(0), Some(2)] {
            let pmf = enumerate_transcripts(&p, spec, fam, j).unwrap();
            assert!((pmf.total() - 1.0).abs() < 1e-12);
        }
        let fam2 = HideSeekFamily::V2 { d: 3, rho: 0.03 };
        let q = FnProtocol(|_: usize, batch: &[Instance], _: &[Message]| {
            Message::bit(batch[0].as_sparse().unwrap().get(1) > 0.0)
        });
        let pmf = enumerate_transcripts(&q, ProtocolSpec { b: 1, n: 1, m: 4 }, fam2, Some(1)).unwrap();
        assert!((pmf.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kl_of_sign_protocol_matches_bernoulli_formula() {
        let rho: f64 = 0.25;
        let fam = HideSeekFamily::V1 { d: 2, rho };
        let spec = ProtocolSpec { b: 1, n: 1, m: 1 };
        let p0 = enumerate_transcripts(&FnProtocol(sign_of(1)), spec, fam, None).unwrap();
        let pj = enumerate_transcripts(&FnProtocol(sign_of(1)), spec, fam, Some(1)).unwrap();
        let (a, b) = p0.aligned(&pj, Base::Nats).unwrap();
        let got = kl(&a, &b).unwrap();
        assert!((got - (-0.5 * (1.0 - 4.0 * rho * rho).ln())).abs() < 1e-15);
        assert!((got - 0.143_841).abs() < 1e-6);
    }

    #[test]
    fn cap_is_enforced() {
        let fam = HideSeekFamily::V1 { d: 4, rho: 0.1 };
        let spec = ProtocolSpec { b: 1, n: 1, m: 7 }; // 16^7 = 2^28
        let err = enumerate_transcripts(&FnProtocol(sign_of(0)), spec, fam, None).unwrap_err();
        assert!(matches!(err, Error::EnumerationTooLarge { .. }));
        let small = enumerate_transcripts_with_cap(&FnProtocol(sign_of(0)), ProtocolSpec { b: 1, n: 1, m: 2 }, fam, None, 255);
        assert!(matches!(small, Err(Error::EnumerationTooLarge { size: 256, cap: 255 })));
    }

    #[test]
    fn input_ignoring_protocol_has_zero_kl() {
        let fam = HideSeekFamily::V1 { d: 2, rho: 0.1 };
        let p = FnProtocol(|_: usize, _: &[Instance], _: &[Message]| Message::bit(true));
        let r = transcript_kl_bound_check(&p, ProtocolSpec { b: 1, n: 1, m: 2 }, fam).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.holds);
        assert_eq!(r.checks.len(), 2);
    }

    #[test]
    fn sign_protocol_two_rounds_bounds() {
        let rho: f64 = 0.1;
        let fam = HideSeekFamily::V1 { d: 2, rho };
        let r = transcript_kl_bound_check(&FnProtocol(sign_of(0)), ProtocolSpec { b: 1, n: 1, m: 2 }, fam).unwrap();
        // Independent oracle: two i.i.d. rounds of Bernoulli(1/2) vs Bernoulli(1/2 + rho) on
        // coordinate 0, nothing on coordinate 1.
        let per_round = -0.5 * (1.0 - 4.0 * rho * rho).ln();
        assert!((r.per_j[0] - 2.0 * per_round).abs() < 1e-14);
        assert!(r.per_j[1].abs() < 1e-15);
        assert!((r.lhs - 2.0 * per_round).abs() < 1e-14);
        let rhs: Vec<f64> = r.checks.iter().map(|c| c.rhs).collect();
        assert!((rhs[0] - 1.02).abs() < 1e-12, "{rhs:?}");
        assert!((rhs[1] - 0.12).abs() < 1e-12, "{rhs:?}");
        assert!(r.holds);
    }

    #[test]
    fn rho_range_enforced() {
        let fam = HideSeekFamily::V1 { d: 2, rho: 0.3 };
        let err = transcript_kl_bound_check(&FnProtocol(sign_of(0)), ProtocolSpec { b: 1, n: 1, m: 1 }, fam);
        assert!(matches!(err, Err(Error::RhoOutOfRange { .. })));
        let fam = HideSeekFamily::V2 { d: 2, rho: 0.05 };
        let q = FnProtocol(|_: usize, _: &[Instance], _: &[Message]| Message::bit(false));
        assert!(matches!(
            transcript_kl_bound_check(&q, ProtocolSpec { b: 1, n: 1, m: 1 }, fam),
            Err(Error::RhoOutOfRange { bound: "sparse", .. })
        ));
    }

    #[test]
    fn enumeration_matches_simulated_histogram() {
        let fam = HideSeekFamily::V1 { d: 2, rho: 0.2 };
        let table = TableProtocol::new(fam, 0b0110, 0b1011_0010);
        let spec = TableProtocol::spec();
        let exact = enumerate_transcripts(&table, spec, fam, Some(1)).unwrap();
        let dist = fam.member(Some(1)).unwrap();
        let trials = 1_000_000;
        let mut counts: BTreeMap<Vec<Message>, u64> = BTreeMap::new();
        let mut data = stream(21, 0, Purpose::Data);
        let mut prot = stream(21, 0, Purpose::Protocol);
        let mut p = Deterministic(table);
        for _ in 0..trials {
            let xs = [dist.sample(&mut data), dist.sample(&mut data)];
            let t = run_protocol(&mut p, spec, xs, &mut prot).unwrap();
            *counts.entry(t.messages).or_insert(0) += 1;
        }
        for (key, &pe) in &exact.probs {
            let freq = counts.get(key).copied().unwrap_or(0) as f64 / trials as f64;
            let se = (pe * (1.0 - pe) / trials as f64).sqrt();
            assert!((freq - pe).abs() <= 4.0 * se.max(1e-12), "{key:?}: {freq} vs {pe}");
        }
        assert_eq!(counts.keys().filter(|k| !exact.probs.contains_key(*k)).count(), 0);
    }
}
