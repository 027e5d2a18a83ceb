//! Detection and learning algorithms for the hide-and-seek constructions.
//!
//! Ties always resolve to the lowest coordinate, or the lexicographically
//! smallest pair / entry.

mod regret;
mod segment;

pub use regret::{
    default_exploration, default_hedge_rate, run_bandit_on, run_coordinate_bandit, run_hedge, run_hedge_on, sample_losses,
    trace_from_actions,
    CoordinateBandit, Hedge, RegretTrace,
};
pub use segment::{pair_segment_scan, segment_scan, SampleBudget, ScanLayout, SegmentScan, SegmentSizing};

use std::borrow::Borrow;

use serde::{Deserialize, Serialize};

use crate::distributions::{Instance, MatrixOptSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Detection {
    Coordinate { index: usize },
    Pair { i: usize, j: usize },
    Entry { i: usize, j: usize },
}

/// Position of pair `(i, j)`, `i < j < d`, in lexicographic order.
pub fn pair_index(i: usize, j: usize, d: usize) -> usize {
    debug_assert!(i < j && j < d);
    i * (2 * d - i - 1) / 2 + (j - i - 1)
}

/// Inverse of [`pair_index`].
pub fn pair_from_index(mut k: usize, d: usize) -> (usize, usize) {
    for i in 0..d {
        let row = d - i - 1;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
    }
    panic!("pair index out of range for d = {d}");
}

pub fn pair_count(d: usize) -> usize {
    d * (d.saturating_sub(1)) / 2
}

fn empty(what: &str) -> Error {
    Error::InsufficientData(format!("{what} needs at least one sample"))
}

fn wrong_kind(what: &str) -> Error {
    Error::InvalidSpec(format!("{what}: unexpected instance type"))
}

/// Index of the first maximum.
fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = k;
        }
    }
    best
}

/// Coordinate with the highest empirical mean over dense sign samples.
pub fn full_info_argmax<I>(samples: I, d: usize) -> Result<Detection>
where
    I: IntoIterator,
    I::Item: Borrow<Instance>,
{
    let mut sums = vec![0i64; d];
    let mut count = 0usize;
    for x in samples {
        let x = x.borrow().as_dense().ok_or_else(|| wrong_kind("full_info_argmax"))?;
        if x.len() != d {
            return Err(Error::DimensionMismatch(format!("sample of length {} for d = {d}", x.len())));
        }
        for (s, &v) in sums.iter_mut().zip(x) {
            *s += v as i64;
        }
        count += 1;
    }
    if count == 0 {
        return Err(empty("full_info_argmax"));
    }
    Ok(Detection::Coordinate { index: argmax(&sums) })
}

/// Mode of an action sequence.
pub fn most_common_action(actions: &[usize], d: usize) -> Result<Detection> {
    if actions.is_empty() {
        return Err(empty("most_common_action"));
    }
    let mut counts = vec![0usize; d];
    for &a in actions {
        if a >= d {
            return Err(Error::DimensionMismatch(format!("action {a} outside 0..{d}")));
        }
        counts[a] += 1;
    }
    Ok(Detection::Coordinate { index: argmax(&counts) })
}

/// Pair `(i, j)` maximizing the empirical mean of `x_i x_j`, for two-sparse samples.
/// Only the touched pair of each sample is updated.
pub fn pca_plugin<I>(samples: I, d: usize) -> Result<Detection>
where
    I: IntoIterator,
    I::Item: Borrow<Instance>,
{
    if d < 2 {
        return Err(Error::InvalidSpec("pca_plugin needs d >= 2".into()));
    }
    // x_i x_j = (d/2) s1 s2 on the touched pair: compare integer sign sums
    let mut sums = vec![0i64; pair_count(d)];
    let mut count = 0usize;
    for x in samples {
        let x = x.borrow().as_sparse().ok_or_else(|| wrong_kind("pca_plugin"))?;
        if let Some(((i, j), sign)) = x.pair_sign() {
            if j >= d {
                return Err(Error::DimensionMismatch(format!("pair ({i}, {j}) for d = {d}")));
            }
            sums[pair_index(i, j, d)] += sign as i64;
        }
        count += 1;
    }
    if count == 0 {
        return Err(empty("pca_plugin"));
    }
    let (i, j) = pair_from_index(argmax(&sums), d);
    Ok(Detection::Pair { i, j })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochOptResult {
    pub entry: Detection,
    /// `F(e_I, e_J) - min_{i,j} E[Z_ij]`, from the exact population mean.
    pub value_gap: f64,
    /// Smallest empirical entry mean (the plug-in estimate of the optimal value).
    pub empirical_min: f64,
    /// `|empirical_min - min_{i,j} E[Z_ij]|`.
    pub value_error: f64,
}

/// Entry with the smallest empirical mean, i.e. the plug-in minimizer of
/// `w' E[Z] v` over pairs of simplex vertices.
pub fn stochopt_plugin<I>(samples: I, spec: &MatrixOptSpec) -> Result<StochOptResult>
where
    I: IntoIterator,
    I::Item: Borrow<Instance>,
{
    let d = spec.d;
    let mut sums = vec![0i64; d * d];
    let mut count = 0usize;
    for z in samples {
        let z = z.borrow().as_matrix().ok_or_else(|| wrong_kind("stochopt_plugin"))?;
        if z.d != d {
            return Err(Error::DimensionMismatch(format!("{}x{} sample for d = {d}", z.d, z.d)));
        }
        for (s, &v) in sums.iter_mut().zip(&z.entries) {
            *s += v as i64;
        }
        count += 1;
    }
    if count == 0 {
        return Err(empty("stochopt_plugin"));
    }
    let neg: Vec<i64> = sums.iter().map(|s| -s).collect();
    let k = argmax(&neg);
    let (i, j) = (k / d, k % d);
    let mean = crate::distributions::DistSpec::MatrixOpt(*spec).population_mean();
    let best = mean.values.iter().copied().fold(f64::INFINITY, f64::min);
    let empirical_min = sums[k] as f64 / count as f64;
    Ok(StochOptResult {
        entry: Detection::Entry { i, j },
        value_gap: bilinear_value(&mean.values, d, i, j) - best,
        empirical_min,
        value_error: (empirical_min - best).abs(),
    })
}

/// `F(w, v) = w' M v` at the simplex vertices `w = e_i`, `v = e_j`.
pub fn bilinear_value(matrix: &[f64], d: usize, i: usize, j: usize) -> f64 {
    let w: Vec<f64> = (0..d).map(|k| f64::from(u8::from(k == i))).collect();
    let v: Vec<f64> = (0..d).map(|k| f64::from(u8::from(k == j))).collect();
    (0..d).map(|r| w[r] * (0..d).map(|c| matrix[r * d + c] * v[c]).sum::<f64>()).sum()
}
