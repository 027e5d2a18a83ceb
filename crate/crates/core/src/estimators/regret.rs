//! Full-information and one-bit-feedback learners on binary loss vectors.

use std::io::Write;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::distributions::{BanditLossSpec, Instance};
use crate::error::{Error, Result};
use crate::protocol::{run_protocol, Message, Protocol, ProtocolSpec};

/// Per-round record of an online learner against a stored loss sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub d: usize,
    pub actions: Vec<usize>,
    /// `l_{t, i_t}`.
    pub losses: Vec<f64>,
    /// Row-major `T x d` loss matrix.
    pub loss_matrix: Vec<u8>,
    pub arm_totals: Vec<f64>,
    pub learner_total: f64,
    /// Regret against the best fixed action in hindsight after each round.
    pub cum_regret_best: Vec<f64>,
}

impl RegretTrace {
    pub fn rounds(&self) -> usize {
        self.actions.len()
    }

    pub fn regret_vs(&self, j: usize) -> f64 {
        self.learner_total - self.arm_totals[j]
    }

    /// [`Self::regret_vs`] recomputed from the stored loss matrix.
    pub fn recompute_regret_vs(&self, j: usize) -> f64 {
        self.regret_vs_at(j, self.rounds())
    }

    /// Regret against action `j` over the first `t` rounds.
    pub fn regret_vs_at(&self, j: usize, t: usize) -> f64 {
        let d = self.d;
        (0..t).map(|s| self.losses[s] - f64::from(self.loss_matrix[s * d + j])).sum()
    }

    /// Regret against action `j` at each checkpoint (round counts, ascending), in one pass.
    pub fn regret_curve_vs(&self, j: usize, checkpoints: &[usize]) -> Vec<f64> {
        let d = self.d;
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut acc = 0.0;
        let mut t = 0;
        for &c in checkpoints {
            while t < c.min(self.rounds()) {
                acc += self.losses[t] - f64::from(self.loss_matrix[t * d + j]);
                t += 1;
            }
            out.push(acc);
        }
        out
    }

    pub fn regret_best(&self) -> f64 {
        self.cum_regret_best.last().copied().unwrap_or(0.0)
    }

    /// Writes `t,action,loss,cum_regret_best` rows, `t` counting rounds from 1.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["t", "action", "loss", "cum_regret_best"])?;
        for t in 0..self.rounds() {
            csv.write_record(&[
                (t + 1).to_string(),
                self.actions[t].to_string(),
                self.losses[t].to_string(),
                self.cum_regret_best[t].to_string(),
            ])?;
        }
        csv.flush().map_err(|e| Error::io("<regret trace>", e))?;
        Ok(())
    }
}

/// Builds the trace of an action sequence against stored loss vectors.
pub fn trace_from_actions(d: usize, actions: Vec<usize>, loss_rows: &[Vec<u8>]) -> Result<RegretTrace> {
    if actions.len() != loss_rows.len() {
        return Err(Error::DimensionMismatch(format!("{} actions for {} loss rows", actions.len(), loss_rows.len())));
    }
    let t_max = actions.len();
    let mut trace = RegretTrace {
        d,
        actions: Vec::with_capacity(t_max),
        losses: Vec::with_capacity(t_max),
        loss_matrix: Vec::with_capacity(t_max * d),
        arm_totals: vec![0.0; d],
        learner_total: 0.0,
        cum_regret_best: Vec::with_capacity(t_max),
    };
    for (a, row) in actions.into_iter().zip(loss_rows) {
        if row.len() != d || a >= d {
            return Err(Error::DimensionMismatch(format!("action {a} / loss row of length {} for d = {d}", row.len())));
        }
        let loss = f64::from(row[a]);
        trace.actions.push(a);
        trace.losses.push(loss);
        trace.loss_matrix.extend_from_slice(row);
        trace.learner_total += loss;
        for (tot, &l) in trace.arm_totals.iter_mut().zip(row) {
            *tot += f64::from(l);
        }
        let best = trace.arm_totals.iter().copied().fold(f64::INFINITY, f64::min);
        trace.cum_regret_best.push(trace.learner_total - best);
    }
    Ok(trace)
}

pub fn default_hedge_rate(d: usize, t: usize) -> f64 {
    (8.0 * (d.max(2) as f64).ln() / t as f64).sqrt()
}

pub fn default_exploration(d: usize, t: usize) -> f64 {
    (d as f64 * (d.max(2) as f64).ln() / t as f64).sqrt().min(1.0)
}

/// Draws an index from `p` by inverse CDF; falls back to the last index on rounding slack.
fn draw(p: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

fn softmax(log_w: &[f64]) -> Vec<f64> {
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|&l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Exponential weights over `d` actions with full loss observation.
#[derive(Debug, Clone)]
pub struct Hedge {
    eta: f64,
    log_w: Vec<f64>,
}

impl Hedge {
    pub fn new(d: usize, eta: f64) -> Result<Self> {
        if d == 0 || !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidSpec(format!("hedge needs d >= 1 and a positive rate, got d = {d}, eta = {eta}")));
        }
        Ok(Self { eta, log_w: vec![0.0; d] })
    }

    pub fn distribution(&self) -> Vec<f64> {
        softmax(&self.log_w)
    }

    pub fn choose(&self, rng: &mut dyn RngCore) -> usize {
        draw(&self.distribution(), rng)
    }

    pub fn update(&mut self, losses: &[u8]) {
        for (w, &l) in self.log_w.iter_mut().zip(losses) {
            *w -= self.eta * f64::from(l);
        }
    }
}

/// Hedge on a given loss sequence.
pub fn run_hedge_on(d: usize, eta: f64, loss_rows: &[Vec<u8>], rng: &mut dyn RngCore) -> Result<RegretTrace> {
    if loss_rows.is_empty() {
        return Err(Error::InvalidSpec("hedge needs T >= 1".into()));
    }
    let mut hedge = Hedge::new(d, eta)?;
    let mut actions = Vec::with_capacity(loss_rows.len());
    for row in loss_rows {
        actions.push(hedge.choose(rng));
        hedge.update(row);
    }
    trace_from_actions(d, actions, loss_rows)
}

/// `t` loss vectors drawn from `spec`.
pub fn sample_losses(spec: &BanditLossSpec, t: usize, rng: &mut dyn RngCore) -> Vec<Vec<u8>> {
    (0..t)
        .map(|_| match spec.sample(rng) {
            Instance::BinaryLoss(v) => v,
            _ => unreachable!("bandit sampler returns loss vectors"),
        })
        .collect()
}

/// Hedge for `t` rounds on losses drawn from `spec` with `data_rng`; `eta = None`
/// selects [`default_hedge_rate`].
pub fn run_hedge(
    spec: &BanditLossSpec,
    t: usize,
    eta: Option<f64>,
    data_rng: &mut dyn RngCore,
    learner_rng: &mut dyn RngCore,
) -> Result<RegretTrace> {
    spec.validate()?;
    let rows = sample_losses(spec, t, data_rng);
    run_hedge_on(spec.d, eta.unwrap_or_else(|| default_hedge_rate(spec.d, t.max(1))), &rows, learner_rng)
}

/// Exp3-style learner that sees one loss bit per round, as a `(1, 1, T)` protocol.
///
/// Each message is the observed bit `l_{t, i_t}`. The action behind the
/// previous message is held as pending and folded into the weights at the next step.
#[derive(Debug, Clone)]
pub struct CoordinateBandit {
    gamma: f64,
    eta: f64,
    log_w: Vec<f64>,
    pending: Option<(usize, f64)>,
    actions: Vec<usize>,
}

impl CoordinateBandit {
    pub fn new(d: usize, t: usize) -> Result<Self> {
        Self::with_exploration(d, default_exploration(d, t.max(1)))
    }

    pub fn with_exploration(d: usize, gamma: f64) -> Result<Self> {
        if d == 0 || !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidSpec(format!("bandit needs d >= 1 and gamma in (0, 1], got d = {d}, gamma = {gamma}")));
        }
        Ok(Self { gamma, eta: gamma / d as f64, log_w: vec![0.0; d], pending: None, actions: Vec::new() })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn distribution(&self) -> Vec<f64> {
        let d = self.log_w.len() as f64;
        softmax(&self.log_w).into_iter().map(|p| (1.0 - self.gamma) * p + self.gamma / d).collect()
    }
}

impl Protocol for CoordinateBandit {
    type Output = Vec<usize>;

    fn step(&mut self, _round: usize, batch: &[Instance], history: &[Message], rng: &mut dyn RngCore) -> Message {
        if let (Some((a, p)), Some(last)) = (self.pending.take(), history.last()) {
            let loss = f64::from(u8::from(last.get(0)));
            self.log_w[a] += self.eta * (1.0 - loss) / p;
        }
        let p = self.distribution();
        let a = draw(&p, rng);
        self.pending = Some((a, p[a]));
        self.actions.push(a);
        let losses = batch[0].as_losses().expect("bandit learner fed a non-loss instance");
        Message::bit(losses[a] == 1)
    }

    fn finish(&mut self, _history: &[Message]) -> Vec<usize> {
        std::mem::take(&mut self.actions)
    }
}

/// The one-bit learner on `t` rounds of losses from `spec`, run through the protocol runtime.
pub fn run_coordinate_bandit(
    spec: &BanditLossSpec,
    t: usize,
    data_rng: &mut dyn RngCore,
    learner_rng: &mut dyn RngCore,
) -> Result<RegretTrace> {
    spec.validate()?;
    let rows = sample_losses(spec, t, data_rng);
    run_bandit_on(spec.d, &rows, learner_rng)
}

/// The one-bit learner on a given loss sequence.
pub fn run_bandit_on(d: usize, loss_rows: &[Vec<u8>], rng: &mut dyn RngCore) -> Result<RegretTrace> {
    let t = loss_rows.len();
    let mut learner = CoordinateBandit::new(d, t)?;
    let pspec = ProtocolSpec::new(1, 1, t)?;
    let source = loss_rows.iter().map(|r| Instance::BinaryLoss(r.clone()));
    let transcript = run_protocol(&mut learner, pspec, source, rng)?;
    trace_from_actions(d, transcript.output, loss_rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn spec(d: usize, rho: f64, j: usize) -> BanditLossSpec {
        BanditLossSpec::new(d, rho, j).unwrap()
    }

    #[test]
    fn single_round_regret_at_most_one() {
        for trial in 0..50 {
            let tr = run_hedge(&spec(4, 0.1, 0), 1, None, &mut stream(1, trial, Purpose::Data), &mut stream(1, trial, Purpose::Protocol)).unwrap();
            assert!(tr.regret_best() <= 1.0 && tr.regret_best() >= 0.0);
        }
    }

    #[test]
    fn trace_is_consistent_with_stored_losses() {
        let tr = run_coordinate_bandit(&spec(6, 0.2, 3), 2000, &mut stream(2, 0, Purpose::Data), &mut stream(2, 0, Purpose::Protocol)).unwrap();
        assert_eq!(tr.rounds(), 2000);
        for j in 0..6 {
            assert!((tr.regret_vs(j) - tr.recompute_regret_vs(j)).abs() < 1e-9);
        }
        let curve = tr.regret_curve_vs(3, &[10, 500, 2000]);
        assert!((curve[1] - tr.regret_vs_at(3, 500)).abs() < 1e-9);
        assert!((curve[2] - tr.regret_vs(3)).abs() < 1e-9);
        let best = (0..6).map(|j| tr.regret_vs(j)).fold(f64::NEG_INFINITY, f64::max);
        assert!((tr.regret_best() - best).abs() < 1e-9);
    }

    #[test]
    fn uniform_losses_keep_hedge_uniform() {
        let mut h = Hedge::new(5, 0.3).unwrap();
        for t in 0..100u8 {
            h.update(&[t % 2; 5]);
            assert!(h.distribution().iter().all(|&p| p == 0.2));
        }
    }

    #[test]
    fn hedge_regret_within_classical_bound_on_null() {
        let (d, t) = (8, 10_000);
        let bound = 2.0 * (t as f64 * (d as f64).ln()).sqrt();
        for trial in 0..50 {
            let tr = run_hedge(&spec(d, 0.0, 0), t, None, &mut stream(3, trial, Purpose::Data), &mut stream(3, trial, Purpose::Protocol)).unwrap();
            assert!(tr.regret_best() <= bound, "{}", tr.regret_best());
        }
    }

    #[test]
    fn bandit_on_identical_arms_is_unbiased() {
        let t = 1000;
        let trials = 40;
        let mean: f64 = (0..trials)
            .map(|k| {
                let tr = run_coordinate_bandit(&spec(2, 0.0, 0), t, &mut stream(4, k, Purpose::Data), &mut stream(4, k, Purpose::Protocol)).unwrap();
                tr.regret_vs(0)
            })
            .sum::<f64>()
            / trials as f64;
        assert!(mean.abs() <= 3.0 * (t as f64).sqrt());
    }

    #[test]
    fn bandit_messages_are_single_bits() {
        let rows = sample_losses(&spec(5, 0.1, 2), 300, &mut stream(5, 0, Purpose::Data));
        let mut learner = CoordinateBandit::new(5, 300).unwrap();
        let source = rows.iter().map(|r| Instance::BinaryLoss(r.clone()));
        let tr = run_protocol(&mut learner, ProtocolSpec::new(1, 1, 300).unwrap(), source, &mut stream(5, 0, Purpose::Protocol)).unwrap();
        assert_eq!(tr.messages.len(), 300);
        for (t, (m, &a)) in tr.messages.iter().zip(&tr.output).enumerate() {
            assert!(a < 5);
            assert_eq!(m.len(), 1);
            assert_eq!(m.get(0), rows[t][a] == 1);
        }
    }

    #[test]
    fn bandit_concentrates_on_strong_bias() {
        let tr = run_coordinate_bandit(&spec(4, 0.25, 1), 20_000, &mut stream(6, 0, Purpose::Data), &mut stream(6, 0, Purpose::Protocol)).unwrap();
        assert_eq!(crate::estimators::most_common_action(&tr.actions, 4).unwrap(), crate::estimators::Detection::Coordinate { index: 1 });
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let tr = run_hedge(&spec(3, 0.1, 0), 5, Some(0.5), &mut stream(7, 0, Purpose::Data), &mut stream(7, 0, Purpose::Protocol)).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,action,loss,cum_regret_best");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("1,"));
    }
}
