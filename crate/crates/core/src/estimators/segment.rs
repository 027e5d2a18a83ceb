//! Memory-limited detection by scanning coordinate segments.
//!
//! Coordinates are split into consecutive segments small enough that one
//! integer counter per coordinate, plus bookkeeping, fits in `b` bits. Each
//! segment gets its own `N` fresh instances; at the end of a segment its best
//! coordinate is recorded if its empirical mean clears the threshold. The whole
//! state lives in the message, so the runtime audits the bit budget literally.
//!
//! State layout (most significant first):
//!
//! | field          | width                 |
//! |----------------|-----------------------|
//! | segment index  | `bits(S)`             |
//! | samples seen   | `bits(N)`             |
//! | counters       | `s * bits(2N)`        |
//! | hit flag       | 1                     |
//! | hit index      | `bits(D - 1)`         |
//! | best flag      | 1                     |
//! | best index     | `bits(D - 1)`         |
//! | best counter   | `bits(2N)`            |
//!
//! Counters hold `sum + N`, so a sum of `N` increments in `{-1, 0, 1}` fits exactly.

use std::borrow::Borrow;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{pair_count, pair_from_index, pair_index, Detection};
use crate::distributions::Instance;
use crate::error::{Error, Result};
use crate::protocol::{bits_for, run_protocol, BitWriter, Message, Online, OnlineProtocol};

/// How many instances each segment consumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleBudget {
    /// `N = ceil(2 ln(2D / delta) / t^2)` with `t` the detection threshold: a
    /// union bound over all `D` coordinates keeps the failure probability below `delta`.
    Hoeffding { delta: f64 },
    /// A fixed total of `m` instances split evenly across segments (remainder unused).
    Total { m: usize },
}

/// How wide each segment is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentSizing {
    /// Widest segment whose state fits in this many bits.
    Bits(usize),
    /// Fixed number of counters per segment.
    Counters(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Kind {
    /// Coordinates of dense sign vectors.
    Dense { d: usize },
    /// Products `x_i x_j` of two-sparse vectors, one virtual coordinate per pair.
    Pairs { d: usize },
}

impl Kind {
    fn coords(&self) -> usize {
        match *self {
            Kind::Dense { d } => d,
            Kind::Pairs { d } => pair_count(d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanLayout {
    /// Number of (virtual) coordinates `D`.
    pub coords: usize,
    /// Counters per segment `s`.
    pub segment_size: usize,
    /// `S = ceil(D / s)`.
    pub segments: usize,
    /// Instances per segment `N`.
    pub per_segment: usize,
    /// A coordinate is a hit when its mean increment exceeds this.
    pub threshold: f64,
}

impl ScanLayout {
    fn widths(&self) -> (usize, usize, usize, usize) {
        let seg = bits_for(self.segments as u64);
        let seen = bits_for(self.per_segment as u64);
        let counter = bits_for(2 * self.per_segment as u64);
        let index = bits_for(self.coords as u64 - 1);
        (seg, seen, counter, index)
    }

    /// Total state size in bits.
    pub fn state_bits(&self) -> usize {
        let (seg, seen, counter, index) = self.widths();
        seg + seen + self.segment_size * counter + 1 + index + 1 + index + counter
    }

    /// Instances consumed by a full scan.
    pub fn instances(&self) -> usize {
        self.segments * self.per_segment
    }
}

fn hoeffding_samples(coords: usize, delta: f64, threshold: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidSpec(format!("delta = {delta} outside (0, 1)")));
    }
    Ok((2.0 * (2.0 * coords as f64 / delta).ln() / (threshold * threshold)).ceil() as usize)
}

fn layout(coords: usize, s: usize, budget: SampleBudget, threshold: f64) -> Result<ScanLayout> {
    let segments = coords.div_ceil(s);
    let per_segment = match budget {
        SampleBudget::Hoeffding { delta } => hoeffding_samples(coords, delta, threshold)?,
        SampleBudget::Total { m } => m / segments,
    };
    if per_segment == 0 {
        return Err(Error::InsufficientData(format!("{segments} segments cannot share the sample budget")));
    }
    Ok(ScanLayout { coords, segment_size: s, segments, per_segment, threshold })
}

fn fit(coords: usize, sizing: SegmentSizing, budget: SampleBudget, threshold: f64) -> Result<ScanLayout> {
    match sizing {
        SegmentSizing::Counters(s) => {
            if s == 0 {
                return Err(Error::InvalidSpec("segments need at least one counter".into()));
            }
            layout(coords, s.min(coords), budget, threshold)
        }
        SegmentSizing::Bits(b) => {
            for s in (1..=coords).rev() {
                let l = layout(coords, s, budget, threshold)?;
                if l.state_bits() <= b {
                    return Ok(l);
                }
            }
            let needed = layout(coords, 1, budget, threshold)?.state_bits();
            Err(Error::BudgetTooSmall { budget: b, needed })
        }
    }
}

/// A segment-scan detector, runnable as a `b`-memory online protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentScan {
    kind: Kind,
    layout: ScanLayout,
}

struct State {
    segment: usize,
    seen: usize,
    counters: Vec<u64>,
    hit: Option<usize>,
    best: Option<(usize, u64)>,
}

impl SegmentScan {
    /// Scan over the coordinates of dense `±1` instances with bias `rho`
    /// (threshold `rho`, halfway between the null mean and the biased mean `2 rho`).
    pub fn dense(d: usize, rho: f64, sizing: SegmentSizing, budget: SampleBudget) -> Result<Self> {
        if d == 0 || !(rho > 0.0 && rho <= 0.5) {
            return Err(Error::InvalidSpec(format!("dense scan needs d >= 1 and rho in (0, 1/2], got d = {d}, rho = {rho}")));
        }
        let kind = Kind::Dense { d };
        Ok(Self { kind, layout: fit(kind.coords(), sizing, budget, rho)? })
    }

    /// Scan over the `d(d-1)/2` products `x_i x_j` of two-sparse instances whose
    /// planted pair has covariance `tau = 2 rho / (d - 1)`; the threshold is `tau / 2`.
    pub fn pairs(d: usize, rho: f64, sizing: SegmentSizing, budget: SampleBudget) -> Result<Self> {
        if d < 2 || !(rho > 0.0 && rho < 0.5) {
            return Err(Error::InvalidSpec(format!("pair scan needs d >= 2 and rho in (0, 1/2), got d = {d}, rho = {rho}")));
        }
        // a sample touches the planted pair w.p. 2/(d(d-1)) and then s1 s2 has mean 2 rho
        let threshold = 2.0 * rho / (d as f64 * (d as f64 - 1.0));
        let kind = Kind::Pairs { d };
        Ok(Self { kind, layout: fit(kind.coords(), sizing, budget, threshold)? })
    }

    pub fn layout(&self) -> &ScanLayout {
        &self.layout
    }

    pub fn budget_bits(&self) -> usize {
        self.layout.state_bits()
    }

    pub fn instances(&self) -> usize {
        self.layout.instances()
    }

    /// Runs the scan through the protocol runtime on the first
    /// [`Self::instances`] elements of `stream`.
    pub fn run<I>(&self, stream: I, rng: &mut dyn RngCore) -> Result<Detection>
    where
        I: IntoIterator<Item = Instance>,
    {
        let mut protocol = Online(self.clone());
        let spec = protocol.spec(self.instances())?;
        Ok(run_protocol(&mut protocol, spec, stream, rng)?.output)
    }

    fn decode(&self, msg: &Message) -> State {
        let l = &self.layout;
        let (seg_w, seen_w, ctr_w, idx_w) = l.widths();
        let mut r = msg.reader();
        let segment = r.read_uint(seg_w) as usize;
        let seen = r.read_uint(seen_w) as usize;
        let counters = (0..l.segment_size).map(|_| r.read_uint(ctr_w)).collect();
        let hit_flag = r.read_bit();
        let hit_idx = r.read_uint(idx_w) as usize;
        let best_flag = r.read_bit();
        let best_idx = r.read_uint(idx_w) as usize;
        let best_ctr = r.read_uint(ctr_w);
        State {
            segment,
            seen,
            counters,
            hit: hit_flag.then_some(hit_idx),
            best: best_flag.then_some((best_idx, best_ctr)),
        }
    }

    fn encode(&self, s: &State) -> Message {
        let (seg_w, seen_w, ctr_w, idx_w) = self.layout.widths();
        let mut w = BitWriter::new();
        w.push_uint(s.segment as u64, seg_w);
        w.push_uint(s.seen as u64, seen_w);
        for &c in &s.counters {
            w.push_uint(c, ctr_w);
        }
        w.push_bit(s.hit.is_some());
        w.push_uint(s.hit.unwrap_or(0) as u64, idx_w);
        w.push_bit(s.best.is_some());
        let (bi, bc) = s.best.unwrap_or((0, 0));
        w.push_uint(bi as u64, idx_w);
        w.push_uint(bc, ctr_w);
        w.finish()
    }

    /// Adds one instance's increments to the counters of the current segment.
    fn accumulate(&self, state: &mut State, x: &Instance) {
        let start = state.segment * self.layout.segment_size;
        let end = (start + self.layout.segment_size).min(self.layout.coords);
        match (self.kind, x) {
            (Kind::Dense { .. }, Instance::DenseSign(v)) => {
                for (c, &s) in state.counters.iter_mut().zip(&v[start..end]) {
                    *c = (*c as i64 + s as i64) as u64;
                }
            }
            (Kind::Pairs { d }, Instance::SparsePair(p)) => {
                if let Some(((i, j), sign)) = p.pair_sign() {
                    let k = pair_index(i, j, d);
                    if (start..end).contains(&k) {
                        let c = &mut state.counters[k - start];
                        *c = (*c as i64 + sign as i64) as u64;
                    }
                }
            }
            _ => panic!("segment scan fed an instance of the wrong type"),
        }
    }

    fn close_segment(&self, state: &mut State) {
        let l = &self.layout;
        let start = state.segment * l.segment_size;
        let width = (l.coords - start).min(l.segment_size);
        let live = &state.counters[..width];
        let mut top = 0;
        for (k, &c) in live.iter().enumerate() {
            if c > live[top] {
                top = k;
            }
        }
        let (idx, ctr) = (start + top, live[top]);
        let n = l.per_segment as f64;
        let mean = (ctr as f64 - n) / n;
        if state.hit.is_none() && mean > l.threshold {
            state.hit = Some(idx);
        }
        if state.best.is_none_or(|(_, c)| ctr > c) {
            state.best = Some((idx, ctr));
        }
        state.segment += 1;
        state.seen = 0;
        state.counters.iter_mut().for_each(|c| *c = l.per_segment as u64);
    }

    fn detection(&self, index: usize) -> Detection {
        match self.kind {
            Kind::Dense { .. } => Detection::Coordinate { index },
            Kind::Pairs { d } => {
                let (i, j) = pair_from_index(index, d);
                Detection::Pair { i, j }
            }
        }
    }
}

impl OnlineProtocol for SegmentScan {
    type Output = Detection;

    fn budget(&self) -> usize {
        self.layout.state_bits()
    }

    fn initial_state(&self) -> Message {
        let state = State {
            segment: 0,
            seen: 0,
            counters: vec![self.layout.per_segment as u64; self.layout.segment_size],
            hit: None,
            best: None,
        };
        self.encode(&state)
    }

    fn update(&self, msg: &Message, x: &Instance, _rng: &mut dyn RngCore) -> Message {
        let mut state = self.decode(msg);
        if state.segment >= self.layout.segments {
            return msg.clone();
        }
        self.accumulate(&mut state, x);
        state.seen += 1;
        if state.seen == self.layout.per_segment {
            self.close_segment(&mut state);
        }
        self.encode(&state)
    }

    /// The first recorded hit; if no segment cleared the threshold, the best
    /// segment winner seen.
    fn output(&self, msg: &Message) -> Detection {
        let state = self.decode(msg);
        let index = state.hit.or(state.best.map(|b| b.0)).unwrap_or(0);
        self.detection(index)
    }
}

/// Segment scan with a `b`-bit state and the Hoeffding per-segment budget.
pub fn segment_scan<I>(stream: I, d: usize, b: usize, rho: f64, delta: f64, rng: &mut dyn RngCore) -> Result<Detection>
where
    I: IntoIterator,
    I::Item: Borrow<Instance>,
{
    let scan = SegmentScan::dense(d, rho, SegmentSizing::Bits(b), SampleBudget::Hoeffding { delta })?;
    scan.run(stream.into_iter().map(|x| x.borrow().clone()), rng)
}

/// Segment scan over the pair products `x_i x_j` of two-sparse instances.
pub fn pair_segment_scan<I>(stream: I, d: usize, b: usize, rho: f64, delta: f64, rng: &mut dyn RngCore) -> Result<Detection>
where
    I: IntoIterator,
    I::Item: Borrow<Instance>,
{
    let scan = SegmentScan::pairs(d, rho, SegmentSizing::Bits(b), SampleBudget::Hoeffding { delta })?;
    scan.run(stream.into_iter().map(|x| x.borrow().clone()), rng)
}
