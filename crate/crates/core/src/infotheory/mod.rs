//! Exact information quantities on explicit finite distributions.
//!
//! Every [`Pmf`] carries the logarithm base its information quantities are
//! reported in. Divergences between two pmfs require matching bases.

mod lemmas;

pub use lemmas::{
    avg_info_budget, balls_bins_moment, dragomir_check, lemma2_bound, random_pmf, DragomirReport, InfoBudget,
    Lemma2Bound, MonteCarloEstimate,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum(p) = 1` at construction.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Base {
    Bits,
    Nats,
}

impl Base {
    pub fn log(self, x: f64) -> f64 {
        match self {
            Base::Bits => x.log2(),
            Base::Nats => x.ln(),
        }
    }

    /// Multiplier converting a quantity in nats into this base.
    pub fn from_nats(self) -> f64 {
        match self {
            Base::Bits => std::f64::consts::LOG2_E,
            Base::Nats => 1.0,
        }
    }
}

fn validate(probs: &[f64]) -> Result<()> {
    if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidSpec(format!("probability {bad} is not a finite non-negative number")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidSpec(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    probs: Vec<f64>,
    base: Base,
}

impl Pmf {
    /// Rejects (does not renormalize) inputs that are off by more than [`NORMALIZATION_TOL`].
    pub fn new(probs: Vec<f64>, base: Base) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidSpec("empty pmf".into()));
        }
        validate(&probs)?;
        Ok(Self { probs, base })
    }

    pub fn uniform(k: usize, base: Base) -> Self {
        Self { probs: vec![1.0 / k as f64; k], base }
    }

    pub fn point_mass(k: usize, at: usize, base: Base) -> Self {
        let mut probs = vec![0.0; k];
        probs[at] = 1.0;
        Self { probs, base }
    }

    /// `(1 - p, p)`.
    pub fn bernoulli(p: f64, base: Base) -> Result<Self> {
        Self::new(vec![1.0 - p, p], base)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn in_base(mut self, base: Base) -> Self {
        self.base = base;
        self
    }

    /// Product distribution, `self` varying slowest.
    pub fn product(&self, other: &Pmf) -> Result<Pmf> {
        if self.base != other.base {
            return Err(Error::BaseMismatch);
        }
        let probs = self.probs.iter().flat_map(|a| other.probs.iter().map(move |b| a * b)).collect();
        Ok(Pmf { probs, base: self.base })
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Pmf, lambda: f64) -> Result<Pmf> {
        check_pair(self, other)?;
        let probs = self.probs.iter().zip(&other.probs).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        Ok(Pmf { probs, base: self.base })
    }
}

fn check_pair(p: &Pmf, q: &Pmf) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!("supports of size {} and {}", p.len(), q.len())));
    }
    if p.base != q.base {
        return Err(Error::BaseMismatch);
    }
    Ok(())
}

/// Shannon entropy in `p.base()` units, with `0 log(1/0) = 0`.
pub fn entropy(p: &Pmf) -> f64 {
    p.probs.iter().filter(|&&x| x > 0.0).map(|&x| -x * p.base.log(x)).sum::<f64>().max(0.0)
}

/// `D(p || q)` in the shared base; `+inf` when `p` puts mass where `q` has none.
pub fn kl(p: &Pmf, q: &Pmf) -> Result<f64> {
    check_pair(p, q)?;
    let mut total = 0.0;
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += a * p.base.log(a / b);
    }
    Ok(total.max(0.0))
}

/// Chi-square divergence `sum (p - q)^2 / q`.
pub fn chi2(p: &Pmf, q: &Pmf) -> Result<f64> {
    check_pair(p, q)?;
    let mut total = 0.0;
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        if b == 0.0 {
            if a > 0.0 {
                return Err(Error::DivisionByZeroSupport);
            }
            continue;
        }
        total += (a - b) * (a - b) / b;
    }
    Ok(total)
}

/// L1 distance `sum |p - q|`, in `[0, 2]`.
pub fn total_variation(p: &Pmf, q: &Pmf) -> Result<f64> {
    check_pair(p, q)?;
    Ok(p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum())
}

/// A joint distribution over a product of finite axes, stored row-major
/// (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    shape: Vec<usize>,
    probs: Vec<f64>,
    base: Base,
}

impl JointPmf {
    pub fn new(shape: Vec<usize>, probs: Vec<f64>, base: Base) -> Result<Self> {
        let size: usize = shape.iter().product();
        if shape.is_empty() || size != probs.len() {
            return Err(Error::DimensionMismatch(format!("shape {shape:?} vs {} entries", probs.len())));
        }
        validate(&probs)?;
        Ok(Self { shape, probs, base })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn axes(&self) -> usize {
        self.shape.len()
    }

    fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for (k, &s) in self.shape.iter().enumerate().rev() {
            out[k] = flat % s;
            flat /= s;
        }
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.axes() {
            return Err(Error::DimensionMismatch(format!("axis {axis} of a {}-axis joint", self.axes())));
        }
        Ok(())
    }

    /// Marginal over `keep` (in the given order).
    pub fn marginal(&self, keep: &[usize]) -> Result<JointPmf> {
        for &a in keep {
            self.check_axis(a)?;
        }
        let shape: Vec<usize> = keep.iter().map(|&a| self.shape[a]).collect();
        let mut probs = vec![0.0; shape.iter().product()];
        let mut idx = vec![0; self.axes()];
        for (flat, &p) in self.probs.iter().enumerate() {
            self.unravel(flat, &mut idx);
            let target = keep.iter().fold(0, |acc, &a| acc * self.shape[a] + idx[a]);
            probs[target] += p;
        }
        Ok(JointPmf { shape, probs, base: self.base })
    }

    /// Distribution of the remaining axes given `axis = value`.
    pub fn condition(&self, axis: usize, value: usize) -> Result<JointPmf> {
        self.check_axis(axis)?;
        if self.axes() == 1 || value >= self.shape[axis] {
            return Err(Error::DimensionMismatch(format!("cannot condition axis {axis} on {value}")));
        }
        let rest: Vec<usize> = (0..self.axes()).filter(|&a| a != axis).collect();
        let shape: Vec<usize> = rest.iter().map(|&a| self.shape[a]).collect();
        let mut probs = vec![0.0; shape.iter().product()];
        let mut idx = vec![0; self.axes()];
        let mut mass = 0.0;
        for (flat, &p) in self.probs.iter().enumerate() {
            self.unravel(flat, &mut idx);
            if idx[axis] == value {
                let target = rest.iter().fold(0, |acc, &a| acc * self.shape[a] + idx[a]);
                probs[target] += p;
                mass += p;
            }
        }
        if mass == 0.0 {
            return Err(Error::InvalidSpec(format!("axis {axis} = {value} has zero probability")));
        }
        probs.iter_mut().for_each(|p| *p /= mass);
        Ok(JointPmf { shape, probs, base: self.base })
    }

    pub fn to_pmf(&self) -> Pmf {
        Pmf { probs: self.probs.clone(), base: self.base }
    }

    /// Joint entropy of the given axes.
    pub fn entropy_of(&self, axes: &[usize]) -> Result<f64> {
        Ok(entropy(&self.marginal(axes)?.to_pmf()))
    }
}

/// `I(A; B)` between two axes, in the joint's base.
pub fn mutual_information(joint: &JointPmf, a: usize, b: usize) -> Result<f64> {
    if a == b {
        return joint.entropy_of(&[a]);
    }
    let pair = joint.marginal(&[a, b])?;
    let pa = joint.marginal(&[a])?.probs;
    let pb = joint.marginal(&[b])?.probs;
    let nb = pb.len();
    let mut total = 0.0;
    for (flat, &p) in pair.probs.iter().enumerate() {
        if p > 0.0 {
            let (x, y) = (flat / nb, flat % nb);
            total += p * joint.base.log(p / (pa[x] * pb[y]));
        }
    }
    Ok(total.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn entropy_examples() {
        close(entropy(&Pmf::uniform(8, Base::Bits)), 3.0, 1e-12);
        assert_eq!(entropy(&Pmf::point_mass(5, 2, Base::Bits)), 0.0);
        // -(1/4) log2(1/4) - (3/4) log2(3/4)
        close(entropy(&Pmf::new(vec![0.25, 0.75], Base::Bits).unwrap()), 0.811_278_124_459_132_9, 1e-12);
        close(entropy(&Pmf::uniform(2, Base::Nats)), std::f64::consts::LN_2, 1e-15);
    }

    #[test]
    fn kl_examples() {
        let p = Pmf::new(vec![0.2, 0.3, 0.5], Base::Nats).unwrap();
        assert_eq!(kl(&p, &p).unwrap(), 0.0);
        let half = Pmf::bernoulli(0.5, Base::Nats).unwrap();
        let biased = Pmf::bernoulli(0.75, Base::Nats).unwrap();
        let want = -0.5 * (1.0f64 - 4.0 * 0.25 * 0.25).ln();
        close(kl(&half, &biased).unwrap(), want, 1e-15);
        close(want, 0.143_841_036_225_890_5, 1e-15);
        let a = Pmf::point_mass(2, 0, Base::Nats);
        let b = Pmf::point_mass(2, 1, Base::Nats);
        assert_eq!(kl(&a, &b).unwrap(), f64::INFINITY);
        assert!(matches!(kl(&a, &Pmf::uniform(3, Base::Nats)), Err(Error::DimensionMismatch(_))));
        assert!(matches!(kl(&a, &Pmf::uniform(2, Base::Bits)), Err(Error::BaseMismatch)));
    }

    #[test]
    fn chi2_and_tv_examples() {
        let half = Pmf::bernoulli(0.5, Base::Nats).unwrap();
        let q = Pmf::bernoulli(0.75, Base::Nats).unwrap();
        assert_eq!(chi2(&half, &half).unwrap(), 0.0);
        close(chi2(&half, &q).unwrap(), 1.0 / 3.0, 1e-15);
        let eps = 0.1;
        let up = Pmf::new(vec![0.5 + eps, 0.5 - eps], Base::Nats).unwrap();
        close(chi2(&up, &half).unwrap(), 4.0 * eps * eps, 1e-15);
        assert!(matches!(
            chi2(&half, &Pmf::point_mass(2, 0, Base::Nats)),
            Err(Error::DivisionByZeroSupport)
        ));
        assert_eq!(total_variation(&half, &half).unwrap(), 0.0);
        close(total_variation(&Pmf::point_mass(2, 0, Base::Nats), &Pmf::point_mass(2, 1, Base::Nats)).unwrap(), 2.0, 0.0);
        close(total_variation(&half, &q).unwrap(), 0.5, 1e-15);
    }

    #[test]
    fn normalization_is_enforced_not_repaired() {
        assert!(Pmf::new(vec![0.5, 0.5 + 1e-9], Base::Bits).is_err());
        assert!(Pmf::new(vec![0.5, 0.5 + 1e-14], Base::Bits).is_ok());
        assert!(Pmf::new(vec![-0.1, 1.1], Base::Bits).is_err());
        assert!(JointPmf::new(vec![2, 2], vec![0.25; 3], Base::Bits).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let indep = JointPmf::new(vec![2, 3], vec![0.1, 0.2, 0.2, 0.1, 0.2, 0.2], Base::Bits).unwrap();
        assert_eq!(mutual_information(&indep, 0, 1).unwrap(), 0.0);
        let copy = JointPmf::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5], Base::Bits).unwrap();
        close(mutual_information(&copy, 0, 1).unwrap(), 1.0, 1e-15);

        let mut rng = stream(3, 0, Purpose::Aux);
        let joint = JointPmf::new(vec![4, 4], random_pmf(16, &mut rng).probs().to_vec(), Base::Bits).unwrap();
        let mi = mutual_information(&joint, 0, 1).unwrap();
        let identity =
            joint.entropy_of(&[0]).unwrap() + joint.entropy_of(&[1]).unwrap() - joint.entropy_of(&[0, 1]).unwrap();
        close(mi, identity, 1e-12);
        close(mi, mutual_information(&joint, 1, 0).unwrap(), 1e-12);
    }

    #[test]
    fn conditioning() {
        let joint = JointPmf::new(vec![2, 2], vec![0.1, 0.3, 0.2, 0.4], Base::Bits).unwrap();
        let c = joint.condition(0, 1).unwrap();
        close(c.probs()[0], 1.0 / 3.0, 1e-15);
        close(c.probs()[1], 2.0 / 3.0, 1e-15);
        let c = joint.condition(1, 0).unwrap();
        close(c.probs()[0], 1.0 / 3.0, 1e-15);
    }

    #[test]
    fn chain_rule_for_products() {
        let mut rng = stream(4, 0, Purpose::Aux);
        for _ in 0..200 {
            let (p1, q1) = (random_pmf(3, &mut rng), random_pmf(3, &mut rng));
            let (p2, q2) = (random_pmf(4, &mut rng), random_pmf(4, &mut rng));
            let joint = kl(&p1.product(&p2).unwrap(), &q1.product(&q2).unwrap()).unwrap();
            close(joint, kl(&p1, &q1).unwrap() + kl(&p2, &q2).unwrap(), 1e-12);
        }
    }

    fn arb_pair() -> impl Strategy<Value = (Pmf, Pmf)> {
        (2usize..8).prop_flat_map(|k| {
            let v = proptest::collection::vec(0.01f64..1.0, k);
            (v.clone(), v).prop_map(|(a, b)| {
                let norm = |v: Vec<f64>| {
                    let s: f64 = v.iter().sum();
                    Pmf::new(v.iter().map(|x| x / s).collect(), Base::Nats).unwrap()
                };
                (norm(a), norm(b))
            })
        })
    }

    proptest! {
        #[test]
        fn pinsker((p, q) in arb_pair()) {
            let tv = total_variation(&p, &q).unwrap();
            prop_assert!(tv <= (2.0 * kl(&p, &q).unwrap()).sqrt() + 1e-9);
        }

        #[test]
        fn joint_convexity((p1, q1) in arb_pair(), lambda in 0.0f64..1.0, seed in 0u64..1000) {
            let mut rng = stream(seed, 0, Purpose::Aux);
            let p2 = random_pmf(p1.len(), &mut rng);
            let q2 = random_pmf(p1.len(), &mut rng);
            let lhs = kl(&p1.mix(&p2, lambda).unwrap(), &q1.mix(&q2, lambda).unwrap()).unwrap();
            let rhs = lambda * kl(&p1, &q1).unwrap() + (1.0 - lambda) * kl(&p2, &q2).unwrap();
            prop_assert!(lhs <= rhs + 1e-9);
        }

        #[test]
        fn mi_bounded_by_marginal_entropies(seed in 0u64..10_000) {
            let mut rng = stream(seed, 1, Purpose::Aux);
            let joint = JointPmf::new(vec![3, 5], random_pmf(15, &mut rng).probs().to_vec(), Base::Bits).unwrap();
            let mi = mutual_information(&joint, 0, 1).unwrap();
            prop_assert!(mi >= 0.0);
            prop_assert!(mi <= joint.entropy_of(&[0]).unwrap().min(joint.entropy_of(&[1]).unwrap()) + 1e-12);
        }
    }
}
