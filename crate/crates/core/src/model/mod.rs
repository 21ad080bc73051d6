//! Shared domain types, configuration and the randomness contract.

mod config;
mod density;
mod rng;

pub use config::{
    BlockResidualConfig, Config, ConstantsConfig, EnumerateConfig, ExperimentConfig, LevyConfig,
    QnConfig, QnPoint, ResidualTarget, RoundConfig, SingularityConfig, SingularityPoint,
    SmoothDemoConfig, StructureConfig, ThresholdConfig, Tolerances,
};
pub use density::{DiscreteDensity, Masses};
pub use rng::{derive_stream, splitmix64, sub_seed, RandomSource};

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n_rows × n_cols` matrix with entries in {0,1}, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix01 {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<u8>,
}

impl Matrix01 {
    pub fn new(n_rows: usize, n_cols: usize, entries: Vec<u8>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::param("matrix dimensions must be positive"));
        }
        if entries.len() != n_rows * n_cols {
            return Err(Error::param(format!(
                "expected {} entries, got {}",
                n_rows * n_cols,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|&&e| e > 1) {
            return Err(Error::param(format!("entry {bad} is not 0 or 1")));
        }
        Ok(Self {
            n_rows,
            n_cols,
            entries,
        })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::param("ragged rows"));
        }
        Self::new(rows.len(), n_cols, rows.concat())
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            entries: vec![0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.entries[i * self.n_cols + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.entries[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.entries.chunks_exact(self.n_cols)
    }

    pub fn column(&self, j: usize) -> Vec<u8> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.entries.iter().map(|&e| e as usize).sum()
    }

    /// Entries as a dense real matrix.
    pub fn to_real(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n_rows, self.n_cols, |i, j| self.get(i, j) as f64)
    }

    pub(crate) fn from_parts_unchecked(n_rows: usize, n_cols: usize, entries: Vec<u8>) -> Self {
        debug_assert_eq!(entries.len(), n_rows * n_cols);
        Self {
            n_rows,
            n_cols,
            entries,
        }
    }
}

impl fmt::Display for Matrix01 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// A vector of finite reals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::param(format!("non-finite coordinate {bad}")));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for RealVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RealVector> for Vec<f64> {
    fn from(v: RealVector) -> Self {
        v.0
    }
}

/// Euclidean unit vector, `|‖x‖₂ − 1| ≤ 1e−12`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector(RealVector);

pub const UNIT_NORM_TOL: f64 = 1e-12;

impl UnitVector {
    /// Accepts a vector that is already unit length.
    pub fn new(v: RealVector) -> Result<Self> {
        let norm = v.norm();
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::param(format!("vector norm {norm} is not 1")));
        }
        Ok(Self(v))
    }

    /// Scales a nonzero vector to unit length.
    pub fn normalize(coords: &[f64]) -> Result<Self> {
        let v = RealVector::new(coords.to_vec())?;
        // Scale by the max first so huge or tiny inputs do not overflow.
        let scale = coords.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return Err(Error::Degenerate("cannot normalize the zero vector".into()));
        }
        let scaled: Vec<f64> = v.0.iter().map(|x| x / scale).collect();
        let norm = scaled.iter().map(|x| x * x).sum::<f64>().sqrt();
        let unit = RealVector(scaled.into_iter().map(|x| x / norm).collect());
        Self::new(unit)
    }

    pub fn coords(&self) -> &[f64] {
        self.0.coords()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_real(&self) -> &RealVector {
        &self.0
    }
}

/// A probability held as an exact reduced fraction `num/den`, `0 ≤ num ≤ den`.
///
/// Enumeration code uses the exact value; Monte Carlo code uses [`Probability::to_f64`]
/// or the exact integer comparison in [`Probability::sample`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Probability {
    num: u64,
    den: u64,
}

impl Probability {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::param(format!("{num}/{den} is not a probability")));
        }
        let g = num_integer::gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub const fn half() -> Self {
        Self { num: 1, den: 2 }
    }

    /// Converts a finite float in [0,1] through its shortest decimal representation,
    /// so `0.3` becomes exactly 3/10.
    pub fn from_f64(p: f64) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::param(format!("probability {p} is not finite")));
        }
        format!("{p}").parse()
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }

    pub fn complement(&self) -> Self {
        Self {
            num: self.den - self.num,
            den: self.den,
        }
    }

    /// Strictly inside (0,1).
    pub fn is_interior(&self) -> bool {
        self.num > 0 && self.num < self.den
    }

    pub fn require_interior(&self) -> Result<()> {
        if self.is_interior() {
            Ok(())
        } else {
            Err(Error::param(format!("p = {self} must lie in (0,1)")))
        }
    }

    /// One exact Bernoulli(p) draw.
    #[inline]
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> bool {
        if self.num == 0 {
            false
        } else if self.num == self.den {
            true
        } else if self.den.is_power_of_two() {
            (rng.next_u64() & (self.den - 1)) < self.num
        } else {
            rng.gen_range(0..self.den) < self.num
        }
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Probability {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::param(format!("cannot parse probability {s:?}"));
        if let Some((a, b)) = s.split_once('/') {
            let num = a.trim().parse::<u64>().map_err(|_| bad())?;
            let den = b.trim().parse::<u64>().map_err(|_| bad())?;
            return Self::new(num, den);
        }
        if s.contains(['e', 'E']) {
            return Err(bad());
        }
        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        if frac_part.len() > 18 || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int_val = if int_part.is_empty() {
            0
        } else {
            int_part.parse::<u64>().map_err(|_| bad())?
        };
        let den = 10u64.pow(frac_part.len() as u32);
        let frac_val = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse::<u64>().map_err(|_| bad())?
        };
        let num = int_val
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac_val))
            .ok_or_else(bad)?;
        Self::new(num, den)
    }
}

impl Serialize for Probability {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Probability {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Float(f64),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse(),
            Raw::Float(f) => Probability::from_f64(f),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// The law of the Boolean weights `b` in `Σ bᵢxᵢ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightModel {
    /// Independent Bernoulli(p) coordinates.
    IidBernoulli { p: Probability },
    /// Uniform on vectors with exactly `m` ones.
    Slice { m: usize },
    /// Independent Bernoulli(p) conditioned on `Σb ∈ [pn − γn, pn + γn]`.
    SliceWindow { p: Probability, gamma: f64 },
}

impl WeightModel {
    /// Inclusive range of admissible weight sums for dimension `n`.
    pub fn sum_range(&self, n: usize) -> Result<(usize, usize)> {
        match *self {
            WeightModel::IidBernoulli { p } => {
                p.require_interior()?;
                Ok((0, n))
            }
            WeightModel::Slice { m } => {
                if m > n {
                    return Err(Error::Model(format!("slice size {m} exceeds n = {n}")));
                }
                Ok((m, m))
            }
            WeightModel::SliceWindow { p, gamma } => {
                p.require_interior()?;
                if !(gamma > 0.0 && gamma <= p.to_f64()) {
                    return Err(Error::Model(format!("gamma = {gamma} must lie in (0, p]")));
                }
                // Exact centre pn, floating half-width γn; a tiny slack absorbs representation error.
                let centre = n as f64 * p.to_f64();
                let half = gamma * n as f64;
                let lo = (centre - half - 1e-9).ceil().max(0.0) as usize;
                let hi = ((centre + half + 1e-9).floor() as usize).min(n);
                if lo > hi {
                    return Err(Error::Model(format!(
                        "window [{:.4}, {:.4}] contains no integer for n = {n}",
                        centre - half,
                        centre + half
                    )));
                }
                Ok((lo, hi))
            }
        }
    }

    /// Unnormalized probability of one particular weight vector with `m` ones.
    pub fn vector_weight(&self, n: usize, m: usize) -> f64 {
        match *self {
            WeightModel::Slice { .. } => 1.0,
            WeightModel::IidBernoulli { p } | WeightModel::SliceWindow { p, .. } => {
                let p = p.to_f64();
                p.powi(m as i32) * (1.0 - p).powi((n - m) as i32)
            }
        }
    }

    /// `ln` of [`WeightModel::vector_weight`], without underflow for large `n`.
    pub fn ln_vector_weight(&self, n: usize, m: usize) -> f64 {
        match *self {
            WeightModel::Slice { .. } => 0.0,
            WeightModel::IidBernoulli { p } | WeightModel::SliceWindow { p, .. } => {
                let p = p.to_f64();
                m as f64 * p.ln() + (n - m) as f64 * (1.0 - p).ln()
            }
        }
    }

    /// Exact version of [`WeightModel::vector_weight`].
    pub fn vector_weight_exact(&self, n: usize, m: usize) -> BigRational {
        match *self {
            WeightModel::Slice { .. } => BigRational::one(),
            WeightModel::IidBernoulli { p } | WeightModel::SliceWindow { p, .. } => {
                let q = p.complement().to_rational();
                num_traits::pow(p.to_rational(), m) * num_traits::pow(q, n - m)
            }
        }
    }

    /// Probability that a model draw has exactly `m` ones, as an `f64`.
    pub fn sum_probability(&self, n: usize, m: usize) -> Result<f64> {
        let (lo, hi) = self.sum_range(n)?;
        if m < lo || m > hi {
            return Ok(0.0);
        }
        let ln_mass = |k: usize| ln_binomial(n, k) + self.ln_vector_weight(n, k);
        let top = (lo..=hi).map(ln_mass).fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = (lo..=hi).map(|k| (ln_mass(k) - top).exp()).sum();
        Ok((ln_mass(m) - top).exp() / total)
    }
}

/// `ln C(n,k)` via log-gamma free summation (exact enough for n ≤ 10⁴).
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Exact binomial coefficient.
pub fn binomial(n: usize, k: usize) -> num_bigint::BigUint {
    if k > n {
        return num_bigint::BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = num_bigint::BigUint::one();
    for i in 0..k {
        acc *= (n - i) as u64;
        acc /= (i + 1) as u64;
    }
    acc
}

/// Binomial coefficient as `u64`, `None` on overflow.
pub fn binomial_u64(n: usize, k: usize) -> Option<u64> {
    binomial(n, k).to_u64()
}
