//! Hide-and-seek style data distributions and their exact moments.
//!
//! Coordinates are 0-based throughout the crate: a hidden coordinate `j`
//! lies in `0..d`, a hidden pair `(i, j)` satisfies `i < j < d`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_dim(d: usize, min: usize) -> Result<()> {
    if d < min {
        return Err(Error::InvalidSpec(format!("dimension d = {d} must be at least {min}")));
    }
    Ok(())
}

fn check_range(name: &str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if !(lo..=hi).contains(&value) {
        return Err(Error::InvalidSpec(format!("{name} = {value} outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn check_coord(name: &str, j: usize, d: usize) -> Result<()> {
    if j >= d {
        return Err(Error::InvalidSpec(format!("{name} = {j} outside 0..{d}")));
    }
    Ok(())
}

/// Product distribution over `{-1,+1}^d` where coordinate `j` is `+1` with
/// probability `1/2 + rho` and every other coordinate is a fair sign.
/// `j = None` is the unbiased reference distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HideSeekV1Spec {
    pub d: usize,
    pub rho: f64,
    #[serde(default)]
    pub j: Option<usize>,
}

impl HideSeekV1Spec {
    pub fn new(d: usize, rho: f64, j: Option<usize>) -> Result<Self> {
        let spec = Self { d, rho, j };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.d, 1)?;
        check_range("rho", self.rho, 0.0, 0.5)?;
        if let Some(j) = self.j {
            check_coord("j", j, self.d)?;
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Instance {
        let mut x = vec![0i8; self.d];
        fill_signs(&mut x, rng);
        if let Some(j) = self.j {
            x[j] = if rng.random_bool(0.5 + self.rho) { 1 } else { -1 };
        }
        Instance::DenseSign(x)
    }

    /// Exact probability of a sign vector.
    pub fn pmf(&self, x: &[i8]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        let mut p = 1.0;
        for (i, &v) in x.iter().enumerate() {
            p *= match self.j {
                Some(j) if j == i => {
                    if v > 0 {
                        0.5 + self.rho
                    } else {
                        0.5 - self.rho
                    }
                }
                _ => 0.5,
            };
        }
        p
    }
}

/// Distribution over `{±e_i}`: the axis is uniform, the sign is fair except on
/// axis `j` where `+e_j` has probability `1/(2d) + rho/d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HideSeekV2Spec {
    pub d: usize,
    pub rho: f64,
    #[serde(default)]
    pub j: Option<usize>,
}

impl HideSeekV2Spec {
    pub fn new(d: usize, rho: f64, j: Option<usize>) -> Result<Self> {
        let spec = Self { d, rho, j };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.d, 1)?;
        check_range("rho", self.rho, 0.0, 0.5)?;
        if let Some(j) = self.j {
            check_coord("j", j, self.d)?;
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Instance {
        let i = rng.random_range(0..self.d);
        let p_plus = if Some(i) == self.j { 0.5 + self.rho } else { 0.5 };
        let v = if rng.random_bool(p_plus) { 1.0 } else { -1.0 };
        Instance::SparsePair(SparsePair::single(i, v))
    }

    /// Exact probability of `sign * e_axis`.
    pub fn pmf(&self, axis: usize, sign: i8) -> f64 {
        let base = 1.0 / (2.0 * self.d as f64);
        match self.j {
            Some(j) if j == axis => {
                let shift = self.rho / self.d as f64;
                if sign > 0 {
                    base + shift
                } else {
                    base - shift
                }
            }
            _ => base,
        }
    }
}

/// Binary loss vectors: coordinate `j` is `0` with probability `1/2 + rho`,
/// all others are fair bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BanditLossSpec {
    pub d: usize,
    pub rho: f64,
    pub j: usize,
}

impl BanditLossSpec {
    pub fn new(d: usize, rho: f64, j: usize) -> Result<Self> {
        let spec = Self { d, rho, j };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.d, 1)?;
        check_range("rho", self.rho, 0.0, 0.25)?;
        check_coord("j", self.j, self.d)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Instance {
        let mut losses = vec![0u8; self.d];
        let mut word = 0u64;
        for (i, l) in losses.iter_mut().enumerate() {
            if i % 64 == 0 {
                word = rng.random();
            }
            *l = ((word >> (i % 64)) & 1) as u8;
        }
        losses[self.j] = if rng.random_bool(0.5 + self.rho) { 0 } else { 1 };
        Instance::BinaryLoss(losses)
    }
}

/// Two-sparse vectors `sqrt(d/2) (s1 e_i + s2 e_j)` with a single correlated pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsePcaSpec {
    pub d: usize,
    pub rho: f64,
    pub pair: (usize, usize),
}

impl SparsePcaSpec {
    pub fn new(d: usize, rho: f64, pair: (usize, usize)) -> Result<Self> {
        let spec = Self { d, rho, pair };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.d, 2)?;
        if !(0.0..0.5).contains(&self.rho) {
            return Err(Error::InvalidSpec(format!("rho = {} outside [0, 1/2)", self.rho)));
        }
        let (i, j) = self.pair;
        if i >= j || j >= self.d {
            return Err(Error::InvalidSpec(format!("pair ({i}, {j}) must satisfy i < j < {}", self.d)));
        }
        Ok(())
    }

    /// Covariance of the planted pair, `2 rho / (d - 1)`.
    pub fn tau(&self) -> f64 {
        2.0 * self.rho / (self.d as f64 - 1.0)
    }

    pub fn magnitude(&self) -> f64 {
        (self.d as f64 / 2.0).sqrt()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Instance {
        let (i, j) = random_pair(self.d, rng);
        let s1: f64 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let agree = if (i, j) == self.pair { 0.5 + self.rho } else { 0.5 };
        let s2 = if rng.random_bool(agree) { s1 } else { -s1 };
        let a = self.magnitude();
        Instance::SparsePair(SparsePair::pair((i, a * s1), (j, a * s2)))
    }
}

/// Independent `±1` matrix entries, all zero-mean except entry `pair` with mean `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixOptSpec {
    pub d: usize,
    pub beta: f64,
    pub pair: (usize, usize),
}

impl MatrixOptSpec {
    pub fn new(d: usize, beta: f64, pair: (usize, usize)) -> Result<Self> {
        let spec = Self { d, beta, pair };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.d, 1)?;
        check_range("beta", self.beta, -1.0, 1.0)?;
        check_coord("pair.0", self.pair.0, self.d)?;
        check_coord("pair.1", self.pair.1, self.d)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Instance {
        let mut entries = vec![0i8; self.d * self.d];
        fill_signs(&mut entries, rng);
        let k = self.pair.0 * self.d + self.pair.1;
        entries[k] = if rng.random_bool((1.0 + self.beta) / 2.0) { 1 } else { -1 };
        Instance::SignMatrix(SignMatrix { d: self.d, entries })
    }
}

/// Uniform pair `(i, j)` with `i < j < d`.
fn random_pair<R: Rng + ?Sized>(d: usize, rng: &mut R) -> (usize, usize) {
    let i = rng.random_range(0..d);
    let mut j = rng.random_range(0..d - 1);
    if j >= i {
        j += 1;
    }
    (i.min(j), i.max(j))
}

/// Fair signs, 64 per random word.
fn fill_signs<R: Rng + ?Sized>(out: &mut [i8], rng: &mut R) {
    for chunk in out.chunks_mut(64) {
        let word: u64 = rng.random();
        for (k, v) in chunk.iter_mut().enumerate() {
            *v = if (word >> k) & 1 == 1 { 1 } else { -1 };
        }
    }
}

/// Up to two `(index, value)` entries with distinct indices, never densified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsePair {
    len: u8,
    idx: [usize; 2],
    val: [f64; 2],
}

impl SparsePair {
    pub fn single(i: usize, v: f64) -> Self {
        Self { len: 1, idx: [i, 0], val: [v, 0.0] }
    }

    pub fn pair(a: (usize, f64), b: (usize, f64)) -> Self {
        assert_ne!(a.0, b.0, "sparse entries must have distinct indices");
        Self { len: 2, idx: [a.0, b.0], val: [a.1, b.1] }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len()).map(|k| (self.idx[k], self.val[k]))
    }

    /// Value at coordinate `i` (zero off the support).
    pub fn get(&self, i: usize) -> f64 {
        self.entries().find(|&(k, _)| k == i).map_or(0.0, |(_, v)| v)
    }

    /// For a two-entry instance: the ordered pair and the sign of `x_i x_j`.
    pub fn pair_sign(&self) -> Option<((usize, usize), i8)> {
        if self.len != 2 {
            return None;
        }
        let (a, b) = (self.idx[0], self.idx[1]);
        let sign = if self.val[0] * self.val[1] > 0.0 { 1 } else { -1 };
        Some(((a.min(b), a.max(b)), sign))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignMatrix {
    pub d: usize,
    /// Row-major `d x d` entries in `{-1, +1}`.
    pub entries: Vec<i8>,
}

impl SignMatrix {
    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entries[i * self.d + j]
    }
}

/// One data point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Instance {
    DenseSign(Vec<i8>),
    SparsePair(SparsePair),
    BinaryLoss(Vec<u8>),
    SignMatrix(SignMatrix),
}

impl Instance {
    pub fn as_dense(&self) -> Option<&[i8]> {
        match self {
            Instance::DenseSign(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_sparse(&self) -> Option<&SparsePair> {
        match self {
            Instance::SparsePair(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_losses(&self) -> Option<&[u8]> {
        match self {
            Instance::BinaryLoss(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&SignMatrix> {
        match self {
            Instance::SignMatrix(x) => Some(x),
            _ => None,
        }
    }

    /// Dense view as real coordinates (matrices flatten row-major).
    pub fn to_dense(&self, d: usize) -> Vec<f64> {
        match self {
            Instance::DenseSign(x) => x.iter().map(|&v| v as f64).collect(),
            Instance::BinaryLoss(x) => x.iter().map(|&v| v as f64).collect(),
            Instance::SignMatrix(m) => m.entries.iter().map(|&v| v as f64).collect(),
            Instance::SparsePair(s) => {
                let mut out = vec![0.0; d];
                for (i, v) in s.entries() {
                    out[i] = v;
                }
                out
            }
        }
    }
}

/// Any of the supported distribution families, serialized as
/// `{"variant": ..., "d": ..., "rho"|"beta": ..., "j"|"pair": ...}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum DistSpec {
    V1(HideSeekV1Spec),
    V2(HideSeekV2Spec),
    Bandit(BanditLossSpec),
    SparsePca(SparsePcaSpec),
    MatrixOpt(MatrixOptSpec),
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DistSpec::V1(s) => s.validate(),
            DistSpec::V2(s) => s.validate(),
            DistSpec::Bandit(s) => s.validate(),
            DistSpec::SparsePca(s) => s.validate(),
            DistSpec::MatrixOpt(s) => s.validate(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Instance {
        match self {
            DistSpec::V1(s) => s.sample(rng),
            DistSpec::V2(s) => s.sample(rng),
            DistSpec::Bandit(s) => s.sample(rng),
            DistSpec::SparsePca(s) => s.sample(rng),
            DistSpec::MatrixOpt(s) => s.sample(rng),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DistSpec::V1(s) => s.d,
            DistSpec::V2(s) => s.d,
            DistSpec::Bandit(s) => s.d,
            DistSpec::SparsePca(s) => s.d,
            DistSpec::MatrixOpt(s) => s.d,
        }
    }

    /// Exact first moments (second moments `E[x_i x_j]` for sparse PCA).
    pub fn population_mean(&self) -> PopulationMean {
        match *self {
            DistSpec::V1(s) => {
                let mut m = PopulationMean::vector(s.d, 0.0);
                if let Some(j) = s.j {
                    m.values[j] = 2.0 * s.rho;
                }
                m
            }
            DistSpec::V2(s) => {
                let mut m = PopulationMean::vector(s.d, 0.0);
                if let Some(j) = s.j {
                    m.values[j] = 2.0 * s.rho / s.d as f64;
                }
                m
            }
            DistSpec::Bandit(s) => {
                let mut m = PopulationMean::vector(s.d, 0.5);
                m.values[s.j] = 0.5 - s.rho;
                m
            }
            DistSpec::SparsePca(s) => {
                let mut m = PopulationMean::matrix(s.d, 0.0);
                for k in 0..s.d {
                    m.values[k * s.d + k] = 1.0;
                }
                let (i, j) = s.pair;
                m.values[i * s.d + j] = s.tau();
                m.values[j * s.d + i] = s.tau();
                m
            }
            DistSpec::MatrixOpt(s) => {
                let mut m = PopulationMean::matrix(s.d, 0.0);
                m.values[s.pair.0 * s.d + s.pair.1] = s.beta;
                m
            }
        }
    }
}

/// Row-major moment table; vectors have a single row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationMean {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl PopulationMean {
    fn vector(d: usize, fill: f64) -> Self {
        Self { rows: 1, cols: d, values: vec![fill; d] }
    }

    fn matrix(d: usize, fill: f64) -> Self {
        Self { rows: d, cols: d, values: vec![fill; d * d] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }
}

/// Hide-and-seek family with a finite instance alphabet, for exact enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum HideSeekFamily {
    V1 { d: usize, rho: f64 },
    V2 { d: usize, rho: f64 },
}

impl HideSeekFamily {
    pub fn d(&self) -> usize {
        match *self {
            HideSeekFamily::V1 { d, .. } | HideSeekFamily::V2 { d, .. } => d,
        }
    }

    pub fn rho(&self) -> f64 {
        match *self {
            HideSeekFamily::V1 { rho, .. } | HideSeekFamily::V2 { rho, .. } => rho,
        }
    }

    /// Number of distinct instances (`2^d` or `2d`).
    pub fn alphabet_size(&self) -> u128 {
        match *self {
            HideSeekFamily::V1 { d, .. } => 1u128.checked_shl(d as u32).unwrap_or(u128::MAX),
            HideSeekFamily::V2 { d, .. } => 2 * d as u128,
        }
    }

    pub fn member(&self, j: Option<usize>) -> Result<DistSpec> {
        Ok(match *self {
            HideSeekFamily::V1 { d, rho } => DistSpec::V1(HideSeekV1Spec::new(d, rho, j)?),
            HideSeekFamily::V2 { d, rho } => DistSpec::V2(HideSeekV2Spec::new(d, rho, j)?),
        })
    }

    /// The full alphabet, in a fixed order.
    pub fn alphabet(&self) -> Vec<Instance> {
        match *self {
            HideSeekFamily::V1 { d, .. } => (0..1usize << d)
                .map(|code| {
                    Instance::DenseSign((0..d).map(|i| if (code >> i) & 1 == 1 { 1 } else { -1 }).collect())
                })
                .collect(),
            HideSeekFamily::V2 { d, .. } => (0..d)
                .flat_map(|i| [1.0, -1.0].map(|s| Instance::SparsePair(SparsePair::single(i, s))))
                .collect(),
        }
    }

    /// Probabilities of [`Self::alphabet`] under member `j` (`None` = reference).
    pub fn alphabet_pmf(&self, j: Option<usize>) -> Result<Vec<f64>> {
        let member = self.member(j)?;
        Ok(self
            .alphabet()
            .iter()
            .map(|x| match (&member, x) {
                (DistSpec::V1(s), Instance::DenseSign(v)) => s.pmf(v),
                (DistSpec::V2(s), Instance::SparsePair(p)) => {
                    let (axis, v) = p.entries().next().expect("single entry");
                    s.pmf(axis, if v > 0.0 { 1 } else { -1 })
                }
                _ => unreachable!("alphabet matches family"),
            })
            .collect())
    }
}
