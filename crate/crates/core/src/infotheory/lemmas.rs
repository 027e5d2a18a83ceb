//! Numeric forms of the auxiliary inequalities used by the lower-bound arguments.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::{chi2, kl, mutual_information, Base, JointPmf, Pmf};
use crate::error::{Error, Result};

const INDEPENDENCE_TOL: f64 = 1e-9;
const CHECK_TOL: f64 = 1e-9;

/// A random pmf on `k` outcomes (nats), drawn from a symmetric Dirichlet whose
/// concentration is itself random, so both spiky and flat cases appear.
pub fn random_pmf<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Pmf {
    let alpha = [0.2, 0.5, 1.0, 3.0][rng.random_range(0..4)];
    let gamma = Gamma::<f64>::new(alpha, 1.0).expect("positive shape");
    loop {
        let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng).max(1e-300)).collect();
        let total: f64 = draws.iter().sum();
        if total.is_finite() && total > 0.0 {
            let probs = draws.iter().map(|x| x / total).collect();
            return Pmf::new(probs, Base::Nats).expect("normalized");
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoBudget {
    /// `(1/d) sum_j I(W; Z_j)` in bits.
    pub value_bits: f64,
    /// `b / d`.
    pub bound_bits: f64,
    pub value_nats: f64,
    /// `b ln 2 / d`.
    pub bound_nats: f64,
    pub holds: bool,
}

impl InfoBudget {
    pub fn margin(&self) -> f64 {
        self.bound_bits - self.value_bits
    }
}

/// Average information a `2^b`-valued `W` (axis 0) carries about each of the
/// independent `Z_1 .. Z_d` (axes `1..=d`).
pub fn avg_info_budget(joint: &JointPmf, b: usize) -> Result<InfoBudget> {
    let d = joint.axes() - 1;
    if d == 0 {
        return Err(Error::DimensionMismatch("joint needs a W axis and at least one Z axis".into()));
    }
    let w_size = joint.shape()[0];
    if b < usize::BITS as usize && w_size > 1usize << b {
        return Err(Error::AlphabetTooLarge { size: w_size, bits: b });
    }

    let z_axes: Vec<usize> = (1..=d).collect();
    let z_joint = joint.marginal(&z_axes)?;
    let singles: Vec<Vec<f64>> =
        z_axes.iter().map(|&a| joint.marginal(&[a]).map(|m| m.probs().to_vec())).collect::<Result<_>>()?;
    let mut deviation = 0.0f64;
    let mut idx = vec![0usize; d];
    for &p in z_joint.probs() {
        let product: f64 = idx.iter().zip(&singles).map(|(&i, m)| m[i]).product();
        deviation = deviation.max((p - product).abs());
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < z_joint.shape()[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    if deviation > INDEPENDENCE_TOL {
        return Err(Error::NotIndependent(deviation));
    }

    let bits = JointPmf::new(joint.shape().to_vec(), joint.probs().to_vec(), Base::Bits)?;
    let total: f64 = z_axes.iter().map(|&a| mutual_information(&bits, 0, a)).sum::<Result<f64>>()?;
    let value_bits = total / d as f64;
    let bound_bits = b as f64 / d as f64;
    Ok(InfoBudget {
        value_bits,
        bound_bits,
        value_nats: value_bits * std::f64::consts::LN_2,
        bound_nats: bound_bits * std::f64::consts::LN_2,
        holds: value_bits <= bound_bits + CHECK_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DragomirReport {
    /// `max_x p(x) / q(x)`.
    pub c: f64,
    pub kl_pq: f64,
    pub kl_qp: f64,
    pub chi2_pq: f64,
    /// `KL(p||q) <= c KL(q||p)`.
    pub lemma4_holds: bool,
    /// `KL(p||q) <= chi2(p||q) <= 2c KL(p||q)`.
    pub lemma5_holds: bool,
}

impl DragomirReport {
    /// Smallest slack across the three inequalities (negative means violated).
    pub fn margin(&self) -> f64 {
        let l4 = if self.kl_qp.is_infinite() { f64::INFINITY } else { self.c * self.kl_qp - self.kl_pq };
        (l4).min(self.chi2_pq - self.kl_pq).min(2.0 * self.c * self.kl_pq - self.chi2_pq)
    }
}

/// Reverse-KL and chi-square sandwich checks for a pair with bounded ratio `p/q`.
/// Divergences are measured in nats.
pub fn dragomir_check(p: &Pmf, q: &Pmf) -> Result<DragomirReport> {
    let p = p.clone().in_base(Base::Nats);
    let q = q.clone().in_base(Base::Nats);
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!("supports of size {} and {}", p.len(), q.len())));
    }
    let mut c = 0.0f64;
    for (&a, &b) in p.probs().iter().zip(q.probs()) {
        if a > 0.0 && b == 0.0 {
            return Err(Error::UnboundedRatio);
        }
        if b > 0.0 {
            c = c.max(a / b);
        }
    }
    let kl_pq = kl(&p, &q)?;
    let kl_qp = kl(&q, &p)?;
    let chi2_pq = chi2(&p, &q)?;
    Ok(DragomirReport {
        c,
        kl_pq,
        kl_qp,
        chi2_pq,
        lemma4_holds: kl_pq <= c * kl_qp + CHECK_TOL,
        lemma5_holds: kl_pq <= chi2_pq + CHECK_TOL && chi2_pq <= 2.0 * c * kl_pq + CHECK_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Monte Carlo estimate of `E[exp(eps * max_j K_j)]` where `K` are the bin
/// loads after throwing `n` balls uniformly into `d` bins.
pub fn balls_bins_moment<R: Rng + ?Sized>(n: usize, d: usize, eps: f64, trials: usize, rng: &mut R) -> MonteCarloEstimate {
    assert!(n >= 1 && d >= 1 && eps >= 0.0 && trials >= 1);
    let mut bins = vec![0usize; d];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..trials {
        bins.iter_mut().for_each(|b| *b = 0);
        for _ in 0..n {
            bins[rng.random_range(0..d)] += 1;
        }
        let max = *bins.iter().max().expect("d >= 1");
        let v = (eps * max as f64).exp();
        sum += v;
        sum_sq += v * v;
    }
    let t = trials as f64;
    let mean = sum / t;
    let var = if trials > 1 { ((sum_sq - t * mean * mean) / (t - 1.0)).max(0.0) } else { 0.0 };
    // constant samples: report an exact zero instead of rounding noise
    let std_error = if var <= 1e-12 * mean * mean { 0.0 } else { (var / t).sqrt() };
    MonteCarloEstimate { mean, std_error, trials }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Bound {
    /// `sqrt((2/d) sum_j KL_j)`.
    pub b: f64,
    /// `min(1, 3/d + 2B)`: some hidden coordinate is detected with at most this probability.
    pub bound: f64,
}

pub fn lemma2_bound(per_j_kls: &[f64]) -> Result<Lemma2Bound> {
    let d = per_j_kls.len();
    if d <= 1 {
        return Err(Error::InvalidSpec(format!("detection bound needs d > 1, got {d}")));
    }
    if per_j_kls.iter().any(|k| k.is_nan() || *k < 0.0) {
        return Err(Error::InvalidSpec("KL values must be non-negative".into()));
    }
    let b = (2.0 / d as f64 * per_j_kls.iter().sum::<f64>()).sqrt();
    Ok(Lemma2Bound { b, bound: (3.0 / d as f64 + 2.0 * b).min(1.0) })
}
