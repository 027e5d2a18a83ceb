use rand::RngCore;

use super::{Message, Protocol, ProtocolSpec};
use crate::distributions::Instance;
use crate::error::{Error, Result};

/// A streaming algorithm whose entire memory is a `b`-bit state.
///
/// `update` sees one instance and the previous state only.
pub trait OnlineProtocol {
    type Output;

    fn budget(&self) -> usize;

    fn initial_state(&self) -> Message;

    fn update(&self, state: &Message, instance: &Instance, rng: &mut dyn RngCore) -> Message;

    fn output(&self, state: &Message) -> Self::Output;
}

/// An online protocol run as a `(b, 1, m)` protocol: each message is the state
/// after one instance.
#[derive(Debug, Clone)]
pub struct Online<P>(pub P);

impl<P: OnlineProtocol> Online<P> {
    pub fn spec(&self, m: usize) -> Result<ProtocolSpec> {
        ProtocolSpec::new(self.0.budget(), 1, m)
    }
}

fn last_state<P: OnlineProtocol>(p: &P, history: &[Message]) -> Message {
    history.last().cloned().unwrap_or_else(|| p.initial_state())
}

impl<P: OnlineProtocol> Protocol for Online<P> {
    type Output = P::Output;

    fn step(&mut self, _round: usize, batch: &[Instance], history: &[Message], rng: &mut dyn RngCore) -> Message {
        let state = last_state(&self.0, history);
        self.0.update(&state, &batch[0], rng)
    }

    fn finish(&mut self, history: &[Message]) -> P::Output {
        self.0.output(&last_state(&self.0, history))
    }
}

/// An online protocol run as a `(b, kappa, floor(m / kappa))` protocol.
#[derive(Debug, Clone)]
pub struct Batched<P> {
    inner: P,
    kappa: usize,
}

impl<P> Batched<P> {
    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

/// Wraps a `b`-memory online protocol over `m` instances as a batched protocol:
/// each batch of `kappa` instances is fed one by one and the resulting state
/// becomes the round's message. The trailing `m mod kappa` instances are never read.
pub fn batch_online<P: OnlineProtocol>(online: P, kappa: usize, m: usize) -> Result<(Batched<P>, ProtocolSpec)> {
    if kappa == 0 || kappa > m {
        return Err(Error::InvalidReduction { kappa, m });
    }
    let spec = ProtocolSpec::new(online.budget(), kappa, m / kappa)?;
    Ok((Batched { inner: online, kappa }, spec))
}

impl<P: OnlineProtocol> Protocol for Batched<P> {
    type Output = P::Output;

    fn step(&mut self, _round: usize, batch: &[Instance], history: &[Message], rng: &mut dyn RngCore) -> Message {
        let budget = self.inner.budget();
        let mut state = last_state(&self.inner, history);
        for x in batch {
            state = self.inner.update(&state, x, rng);
            if state.len() > budget {
                // surfaces as BudgetExceeded in the runtime
                return state;
            }
        }
        state
    }

    fn finish(&mut self, history: &[Message]) -> P::Output {
        self.inner.output(&last_state(&self.inner, history))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::HideSeekV1Spec;
    use crate::protocol::run_protocol;
    use crate::rng::{stream, Purpose};
    use rand::Rng;

    /// Saturating count of positive first coordinates, plus a random bit per step.
    struct Counter {
        width: usize,
    }

    impl OnlineProtocol for Counter {
        type Output = (u64, bool);

        fn budget(&self) -> usize {
            self.width + 1
        }

        fn initial_state(&self) -> Message {
            Message::from_uint(0, self.width + 1)
        }

        fn update(&self, state: &Message, x: &Instance, rng: &mut dyn RngCore) -> Message {
            let count = state.reader().read_uint(self.width);
            let add = u64::from(x.as_dense().unwrap()[0] > 0);
            let next = (count + add).min((1 << self.width) - 1);
            let mut w = crate::protocol::BitWriter::new();
            w.push_uint(next, self.width);
            w.push_bit(rng.random_bool(0.5));
            w.finish()
        }

        fn output(&self, state: &Message) -> (u64, bool) {
            let mut r = state.reader();
            (r.read_uint(self.width), r.read_bit())
        }
    }

    fn data(count: usize) -> Vec<Instance> {
        let spec = HideSeekV1Spec::new(2, 0.1, Some(0)).unwrap();
        let mut rng = stream(5, 0, Purpose::Data);
        (0..count).map(|_| spec.sample(&mut rng)).collect()
    }

    #[test]
    fn kappa_one_matches_online_round_for_round() {
        let xs = data(30);
        let mut online = Online(Counter { width: 6 });
        let spec = online.spec(30).unwrap();
        let a = run_protocol(&mut online, spec, xs.clone(), &mut stream(1, 0, Purpose::Protocol)).unwrap();
        let (mut batched, bspec) = batch_online(Counter { width: 6 }, 1, 30).unwrap();
        assert_eq!(bspec, spec);
        let b = run_protocol(&mut batched, bspec, xs, &mut stream(1, 0, Purpose::Protocol)).unwrap();
        assert_eq!(a.messages, b.messages);
        assert_eq!(a.output, b.output);
    }

    #[test]
    fn kappa_m_is_one_round() {
        let xs = data(17);
        let expected = xs.iter().filter(|x| x.as_dense().unwrap()[0] > 0).count() as u64;
        let (mut p, spec) = batch_online(Counter { width: 6 }, 17, 17).unwrap();
        assert_eq!(spec, ProtocolSpec { b: 7, n: 17, m: 1 });
        let t = run_protocol(&mut p, spec, xs, &mut stream(1, 0, Purpose::Protocol)).unwrap();
        assert_eq!(t.messages.len(), 1);
        assert_eq!(t.output.0, expected);
    }

    #[test]
    fn trailing_instances_are_discarded() {
        let xs = data(10);
        let (mut p, spec) = batch_online(Counter { width: 6 }, 4, 10).unwrap();
        assert_eq!((spec.n, spec.m), (4, 2));
        let mut seen = 0;
        let t = run_protocol(&mut p, spec, xs.iter().cloned().inspect(|_| seen += 1), &mut stream(1, 0, Purpose::Protocol))
            .unwrap();
        assert_eq!(seen, 8);
        let expected = xs[..8].iter().filter(|x| x.as_dense().unwrap()[0] > 0).count() as u64;
        assert_eq!(t.output.0, expected);
    }

    #[test]
    fn kappa_larger_than_m_is_rejected() {
        assert!(matches!(batch_online(Counter { width: 2 }, 11, 10), Err(Error::InvalidReduction { kappa: 11, m: 10 })));
        assert!(batch_online(Counter { width: 2 }, 0, 10).is_err());
    }
}
