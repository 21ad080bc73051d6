//! Lévy concentration of weighted Boolean sums `Σ bᵢxᵢ`, exactly from the enumerated law
//! or by Monte Carlo, and the threshold function built on it.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{binomial, binomial_u64, derive_stream, ln_binomial, sub_seed, Probability, UnitVector, WeightModel};
use crate::sampling::{sample_weights, window_acceptance};

/// Atom values closer than this are merged, and windows are closed up to it.
pub const ATOM_TOL: f64 = 1e-12;

/// Default limit on the number of weight vectors enumerated by [`build_atoms`].
pub const DEFAULT_ATOM_BUDGET: f64 = 1e8;

/// Largest dimension enumerated under the iid model.
pub const MAX_IID_N: usize = 26;

/// Smallest acceptance rate tolerated by rejection sampling of the window model.
pub const MIN_ACCEPTANCE: f64 = 1e-3;

/// The law of `Σ bᵢxᵢ` as sorted atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomSet {
    pub n: usize,
    pub model: WeightModel,
    values: Vec<f64>,
    masses: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl AtomSet {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn exact_masses(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_mass(&self) -> f64 {
        self.masses.iter().cloned().fold(0.0, f64::max)
    }

    /// Empirical law of `samples`, each with mass `1/len`.
    pub fn empirical(n: usize, model: WeightModel, samples: Vec<f64>) -> Result<Self> {
        let total = samples.len() as f64;
        let (values, counts) = empirical_counts(samples)?;
        Ok(AtomSet {
            n,
            model,
            values,
            masses: counts.into_iter().map(|c| c / total).collect(),
            exact: None,
        })
    }

    /// Two tab-separated columns `value mass`, one atom per line.
    pub fn to_text(&self) -> String {
        let mut out = String::from("value\tmass\n");
        for (v, m) in self.values.iter().zip(&self.masses) {
            let _ = writeln!(out, "{v}\t{m}");
        }
        out
    }
}

/// Distinct sample values (merged within [`ATOM_TOL`]) with their counts. Counts are
/// integers stored as `f64`, so window sums over them are exact.
fn empirical_counts(mut samples: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::param("no samples"));
    }
    samples.sort_by(f64::total_cmp);
    let mut values: Vec<f64> = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    let mut start = f64::NAN;
    for s in samples {
        if !values.is_empty() && s - start <= ATOM_TOL {
            *counts.last_mut().unwrap() += 1.0;
        } else {
            start = s;
            values.push(s);
            counts.push(1.0);
        }
    }
    Ok((values, counts))
}

/// Number of weight vectors [`build_atoms`] would enumerate.
pub fn atom_enumeration_size(n: usize, model: &WeightModel) -> Result<f64> {
    let (lo, hi) = model.sum_range(n)?;
    Ok((lo..=hi).map(|m| ln_binomial(n, m).exp()).sum())
}

fn subset_sums(x: &[f64], m: usize, out: &mut Vec<f64>) {
    fn rec(x: &[f64], start: usize, left: usize, acc: f64, out: &mut Vec<f64>) {
        if left == 0 {
            out.push(acc);
            return;
        }
        for i in start..=x.len() - left {
            rec(x, i + 1, left - 1, acc + x[i], out);
        }
    }
    rec(x, 0, m, 0.0, out);
}

/// Sorted, merged `(value, multiplicity)` pairs.
fn dedupe(mut v: Vec<f64>) -> Vec<(f64, u64)> {
    v.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, u64)> = Vec::new();
    for s in v {
        match out.last_mut() {
            Some((start, c)) if s - *start <= ATOM_TOL => *c += 1,
            _ => out.push((s, 1)),
        }
    }
    out
}

/// Exact law of `Σ bᵢxᵢ` under `model`, enumerating every weight vector in the support.
///
/// Refuses with a budget error when more than `budget` vectors would be visited, or when
/// the iid model is asked for `n > 26`. With `exact` the masses are also kept as rationals.
pub fn build_atoms(x: &[f64], model: &WeightModel, budget: f64, exact: bool) -> Result<AtomSet> {
    let n = x.len();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("non-finite coordinate"));
    }
    let (lo, hi) = model.sum_range(n)?;
    if matches!(model, WeightModel::IidBernoulli { .. }) && n > MAX_IID_N {
        return Err(Error::budget("iid atom enumeration", 2f64.powi(n as i32), 2f64.powi(MAX_IID_N as i32)));
    }
    let size = atom_enumeration_size(n, model)?;
    if size > budget * (1.0 + 1e-9) {
        return Err(Error::budget("atom enumeration", size.round(), budget));
    }
    let groups: Vec<(usize, Vec<(f64, u64)>)> = (lo..=hi)
        .into_par_iter()
        .map(|m| {
            let mut sums = Vec::with_capacity(binomial_u64(n, m).unwrap_or(0) as usize);
            subset_sums(x, m, &mut sums);
            (m, dedupe(sums))
        })
        .collect();

    // Per-vector probability of a vector with m ones.
    let ln_total = {
        let terms: Vec<f64> = (lo..=hi).map(|m| ln_binomial(n, m) + model.ln_vector_weight(n, m)).collect();
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
    };
    let per_vector: Vec<f64> = (0..=n)
        .map(|m| if m < lo || m > hi { 0.0 } else { (model.ln_vector_weight(n, m) - ln_total).exp() })
        .collect();
    let per_vector_exact: Option<Vec<BigRational>> = exact.then(|| {
        let z = (lo..=hi)
            .map(|m| model.vector_weight_exact(n, m) * BigRational::from_integer(BigInt::from(binomial(n, m))))
            .fold(BigRational::zero(), |a, b| a + b);
        (0..=n)
            .map(|m| {
                if m < lo || m > hi {
                    BigRational::zero()
                } else {
                    model.vector_weight_exact(n, m) / &z
                }
            })
            .collect()
    });

    let mut flat: Vec<(f64, usize, u64)> = groups
        .into_iter()
        .flat_map(|(m, g)| g.into_iter().map(move |(v, c)| (v, m, c)))
        .collect();
    flat.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut values = Vec::new();
    let mut masses: Vec<f64> = Vec::new();
    let mut exact_masses: Vec<BigRational> = Vec::new();
    for (v, m, c) in flat {
        let fresh = values.last().map_or(true, |&start: &f64| v - start > ATOM_TOL);
        if fresh {
            values.push(v);
            masses.push(0.0);
            if exact {
                exact_masses.push(BigRational::zero());
            }
        }
        *masses.last_mut().unwrap() += c as f64 * per_vector[m];
        if let Some(pv) = &per_vector_exact {
            *exact_masses.last_mut().unwrap() += &pv[m] * BigRational::from_integer(BigInt::from(c));
        }
    }
    Ok(AtomSet {
        n,
        model: model.clone(),
        values,
        masses,
        exact: exact.then_some(exact_masses),
    })
}

/// Heaviest window: the first `(i, j)` maximizing the mass of atoms `i..=j` among windows
/// accepted by `fits(span)`.
fn heaviest_window(values: &[f64], masses: &[f64], fits: impl Fn(f64) -> bool) -> (f64, usize, usize) {
    let mut prefix = Vec::with_capacity(masses.len() + 1);
    prefix.push(0.0);
    for m in masses {
        prefix.push(prefix.last().unwrap() + m);
    }
    let (mut best, mut bi, mut bj) = (0.0, 0, 0);
    let mut j = 0;
    for i in 0..values.len() {
        j = j.max(i);
        while j + 1 < values.len() && fits(values[j + 1] - values[i]) {
            j += 1;
        }
        if !fits(values[j] - values[i]) {
            continue;
        }
        let mass = prefix[j + 1] - prefix[i];
        if mass > best {
            (best, bi, bj) = (mass, i, j);
        }
    }
    (best, bi, bj)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exact,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo => "mc",
        }
    }
}

/// `sup_z P[|ξ − z| ≤ r]`, exactly or as an estimate with a binomial confidence half-width.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationEstimate {
    pub value: f64,
    /// Present when the atoms carried rational masses.
    pub value_exact: Option<BigRational>,
    pub radius: f64,
    pub method: Method,
    pub trials: u64,
    pub ci_halfwidth: f64,
    pub model: WeightModel,
}

/// Largest mass of a closed window of radius `r`; the sup over centres is attained at
/// midpoints of atom pairs, so a two-pointer sweep over the atoms is exact.
pub fn levy_exact(atoms: &AtomSet, r: f64) -> Result<ConcentrationEstimate> {
    if !(r >= 0.0) {
        return Err(Error::param(format!("radius {r} must be nonnegative")));
    }
    let width = 2.0 * r;
    let (value, i, j) = heaviest_window(&atoms.values, &atoms.masses, |d| d <= width + ATOM_TOL);
    let value_exact = atoms
        .exact
        .as_ref()
        .map(|e| e[i..=j].iter().fold(BigRational::zero(), |a, b| a + b));
    let value = value_exact
        .as_ref()
        .and_then(|v| v.to_f64())
        .unwrap_or(value)
        .clamp(0.0, 1.0);
    Ok(ConcentrationEstimate {
        value,
        value_exact,
        radius: r,
        method: Method::Exact,
        trials: 0,
        ci_halfwidth: 0.0,
        model: atoms.model.clone(),
    })
}

/// `trials` independent draws of `Σ bᵢxᵢ`; draw `k` uses `derive_stream(seed, k)`.
pub fn sample_sums(x: &[f64], model: &WeightModel, trials: u64, seed: u64) -> Result<Vec<f64>> {
    let n = x.len();
    let acceptance = window_acceptance(n, model)?;
    if !(acceptance >= MIN_ACCEPTANCE) {
        return Err(Error::Model(format!(
            "rejection acceptance {acceptance:.2e} is below {MIN_ACCEPTANCE:.0e}; the window is too narrow"
        )));
    }
    (0..trials)
        .into_par_iter()
        .map_init(
            || (vec![0u8; n], Vec::new()),
            |(bits, scratch), k| {
                let mut rng = derive_stream(seed, k);
                sample_weights(n, model, bits, scratch, &mut rng)?;
                Ok(bits.iter().zip(x).filter(|(&b, _)| b == 1).map(|(_, v)| v).sum())
            },
        )
        .collect()
}

/// Monte Carlo Lévy value.
///
/// A pilot run of `trials` draws on the stream `sub_seed(seed, 1)` picks the heaviest
/// closed window of its empirical law; the estimate is the fraction of `trials` fresh
/// draws on `seed` that land in that window, centred. Taking the sup over windows of a
/// single sample would bias the estimate upward whenever several windows nearly tie;
/// with the split the count is binomial and `z·√(v(1−v)/trials)` is an honest half-width.
pub fn levy_mc(x: &[f64], r: f64, model: &WeightModel, trials: u64, seed: u64, z: f64) -> Result<ConcentrationEstimate> {
    if trials < 1000 {
        return Err(Error::param("levy_mc needs at least 1000 trials"));
    }
    if !(r >= 0.0) {
        return Err(Error::param(format!("radius {r} must be nonnegative")));
    }
    let (values, counts) = empirical_counts(sample_sums(x, model, trials, sub_seed(seed, 1))?)?;
    let width = 2.0 * r;
    let (_, i, j) = heaviest_window(&values, &counts, |d| d <= width + ATOM_TOL);
    let centre = 0.5 * (values[i] + values[j]);
    let reach = r + ATOM_TOL;
    let hits = sample_sums(x, model, trials, seed)?
        .into_iter()
        .filter(|s| (s - centre).abs() <= reach)
        .count();
    let value = hits as f64 / trials as f64;
    Ok(ConcentrationEstimate {
        value,
        value_exact: None,
        radius: r,
        method: Method::MonteCarlo,
        trials,
        ci_halfwidth: z * (value * (1.0 - value) / trials as f64).sqrt(),
        model: model.clone(),
    })
}

/// `sup{t ∈ (0,1) : L(t) > L·t}` for the law carried by `atoms`, or 0 if the set is empty.
///
/// `L(t)` is a nondecreasing step function. Starting from `t = 1`, if the left limit
/// `L(t⁻)` is at least `L·t` then every `s` just below `t` qualifies and `t` is the sup;
/// otherwise no `s ∈ [L(t⁻)/L, t)` qualifies and the search moves down to `L(t⁻)/L`.
/// The left limits take distinct values, so the descent ends after at most one step per
/// value of `L(·)`.
pub fn threshold_from_atoms(atoms: &AtomSet, l: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::param(format!("L = {l} must be positive")));
    }
    let mut t = 1.0f64;
    loop {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let width = 2.0 * t;
        let (left_limit, _, _) = heaviest_window(&atoms.values, &atoms.masses, |d| d < width + ATOM_TOL);
        let next = left_limit / l;
        if next >= t {
            return Ok(t);
        }
        t = next;
    }
}

/// `T_{p,γ}(x, L)` from the exact atoms of the window model.
pub fn threshold(x: &UnitVector, l: f64, p: Probability, gamma: f64, budget: f64) -> Result<f64> {
    let model = WeightModel::SliceWindow { p, gamma };
    let atoms = build_atoms(x.coords(), &model, budget, false)?;
    threshold_from_atoms(&atoms, l)
}

/// `T_{p,γ}(x, L)` from the empirical law of `trials` samples.
pub fn threshold_mc(x: &UnitVector, l: f64, p: Probability, gamma: f64, trials: u64, seed: u64) -> Result<f64> {
    let model = WeightModel::SliceWindow { p, gamma };
    let sums = sample_sums(x.coords(), &model, trials, seed)?;
    threshold_from_atoms(&AtomSet::empirical(x.len(), model, sums)?, l)
}

/// `C·r / √(Σ (1 − L_i) r_i²)` for terms `(L_i, r_i)`.
pub fn lkr_bound(terms: &[(f64, f64)], r: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::param("C must be positive"));
    }
    for &(levy, ri) in terms {
        if !(0.0..=1.0).contains(&levy) || !(ri > 0.0) {
            return Err(Error::param(format!("bad term ({levy}, {ri})")));
        }
    }
    let max_r = terms.iter().map(|t| t.1).fold(0.0, f64::max);
    if r < max_r {
        return Err(Error::param(format!("r = {r} is below max r_i = {max_r}")));
    }
    let denom: f64 = terms.iter().map(|&(levy, ri)| (1.0 - levy) * ri * ri).sum();
    if denom <= 0.0 {
        return Err(Error::Degenerate("every term is fully concentrated".into()));
    }
    Ok(c * r / denom.sqrt())
}

/// Radii searched for an anticoncentration margin.
pub const THETA_GRID: [f64; 8] = [0.005, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25];

/// Grid point maximizing `1 − p − θ − L(Σ bᵢxᵢ, θ)` under iid Bernoulli(p) weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaSearch {
    pub theta: f64,
    pub levy: f64,
    /// `1 − p − θ − levy`; nonnegative when the bound holds at `theta`.
    pub margin: f64,
}

pub fn best_theta(atoms: &AtomSet, p: f64, grid: &[f64]) -> Result<ThetaSearch> {
    let mut best: Option<ThetaSearch> = None;
    for &theta in grid {
        let levy = levy_exact(atoms, theta)?.value;
        let margin = 1.0 - p - theta - levy;
        if best.map_or(true, |b| margin > b.margin) {
            best = Some(ThetaSearch { theta, levy, margin });
        }
    }
    best.ok_or_else(|| Error::param("empty theta grid"))
}
