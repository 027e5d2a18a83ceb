//! The `(b, n, m)` protocol runtime.
//!
//! A protocol sees `m` consecutive batches of `n` instances. After each batch it
//! emits a message of at most `b` bits that may depend on the batch and on all
//! earlier messages; the final output is a function of the messages alone.
//! The runtime owns the budget check: a protocol that emits more than `b` bits
//! aborts the run with [`Error::BudgetExceeded`].

mod enumerate;
mod message;
mod online;

pub use enumerate::{
    enumerate_transcripts, enumerate_transcripts_with_cap, kl_bound_sweep, transcript_kl_bound_check,
    BoundCheck, KlBound, KlBoundReport, SweepRow, TableProtocol, TranscriptPmf, DEFAULT_ENUMERATION_CAP,
};
pub use message::{bits_for, BitReader, BitWriter, Message};
pub use online::{batch_online, Batched, Online, OnlineProtocol};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::distributions::Instance;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    /// Bits per message.
    pub b: usize,
    /// Batch size.
    pub n: usize,
    /// Number of rounds.
    pub m: usize,
}

impl ProtocolSpec {
    pub fn new(b: usize, n: usize, m: usize) -> Result<Self> {
        if b == 0 || n == 0 || m == 0 {
            return Err(Error::InvalidSpec(format!("protocol spec ({b}, {n}, {m}) needs b, n, m >= 1")));
        }
        Ok(Self { b, n, m })
    }

    /// Instances consumed by a full run.
    pub fn instances(&self) -> usize {
        self.n * self.m
    }
}

/// A `(b, n, m)` protocol.
///
/// `step` receives the current batch and every earlier message; whatever the
/// implementation keeps in `self` between rounds must be recomputable from those
/// messages and its own randomness. Outputs of `finish` are not budgeted.
pub trait Protocol {
    type Output;

    fn step(&mut self, round: usize, batch: &[Instance], history: &[Message], rng: &mut dyn RngCore) -> Message;

    fn finish(&mut self, history: &[Message]) -> Self::Output;
}

/// A protocol whose messages are a pure function of `(round, batch, history)`.
/// These are the protocols [`enumerate_transcripts`] can handle.
pub trait DeterministicProtocol {
    type Output;

    fn message(&self, round: usize, batch: &[Instance], history: &[Message]) -> Message;

    fn output(&self, history: &[Message]) -> Self::Output;
}

/// Runs a [`DeterministicProtocol`] through the ordinary runtime.
#[derive(Debug, Clone)]
pub struct Deterministic<P>(pub P);

impl<P: DeterministicProtocol> Protocol for Deterministic<P> {
    type Output = P::Output;

    fn step(&mut self, round: usize, batch: &[Instance], history: &[Message], _rng: &mut dyn RngCore) -> Message {
        self.0.message(round, batch, history)
    }

    fn finish(&mut self, history: &[Message]) -> P::Output {
        self.0.output(history)
    }
}

/// Deterministic protocol built from a closure; the output is the message sequence.
pub struct FnProtocol<F>(pub F);

impl<F> DeterministicProtocol for FnProtocol<F>
where
    F: Fn(usize, &[Instance], &[Message]) -> Message,
{
    type Output = Vec<Message>;

    fn message(&self, round: usize, batch: &[Instance], history: &[Message]) -> Message {
        (self.0)(round, batch, history)
    }

    fn output(&self, history: &[Message]) -> Vec<Message> {
        history.to_vec()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript<O> {
    pub spec: ProtocolSpec,
    pub messages: Vec<Message>,
    pub output: O,
}

#[derive(Serialize, Deserialize)]
struct RoundRepr {
    round: usize,
    #[serde(flatten)]
    message: Message,
}

#[derive(Serialize, Deserialize)]
struct TranscriptRepr<O> {
    spec: ProtocolSpec,
    messages: Vec<RoundRepr>,
    output: O,
}

impl<O: Serialize + Clone> Serialize for Transcript<O> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TranscriptRepr {
            spec: self.spec,
            messages: self
                .messages
                .iter()
                .enumerate()
                .map(|(round, m)| RoundRepr { round, message: m.clone() })
                .collect(),
            output: self.output.clone(),
        }
        .serialize(s)
    }
}

impl<'de, O: Deserialize<'de>> Deserialize<'de> for Transcript<O> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = TranscriptRepr::<O>::deserialize(d)?;
        Ok(Transcript {
            spec: repr.spec,
            messages: repr.messages.into_iter().map(|r| r.message).collect(),
            output: repr.output,
        })
    }
}

/// Feeds `m` disjoint consecutive batches of `n` instances from `source` to `protocol`.
pub fn run_protocol<P, I>(
    protocol: &mut P,
    spec: ProtocolSpec,
    source: I,
    rng: &mut dyn RngCore,
) -> Result<Transcript<P::Output>>
where
    P: Protocol + ?Sized,
    I: IntoIterator<Item = Instance>,
{
    let mut source = source.into_iter();
    let mut messages = Vec::with_capacity(spec.m);
    let mut batch = Vec::with_capacity(spec.n);
    for round in 0..spec.m {
        batch.clear();
        batch.extend(source.by_ref().take(spec.n));
        if batch.len() < spec.n {
            return Err(Error::InsufficientData(format!(
                "stream exhausted in round {round}: needed {} instances, got {}",
                spec.instances(),
                round * spec.n + batch.len()
            )));
        }
        let msg = protocol.step(round, &batch, &messages, rng);
        if msg.len() > spec.b {
            return Err(Error::BudgetExceeded { round, len: msg.len(), budget: spec.b });
        }
        messages.push(msg);
    }
    let output = protocol.finish(&messages);
    Ok(Transcript { spec, messages, output })
}
