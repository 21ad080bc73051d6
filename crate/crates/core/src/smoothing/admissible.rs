use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::UnitVector;
use crate::sampling::LatticePoint;
use crate::structured::{DecompositionWitness, WitnessCase};

/// A finite set of integers: one interval or two disjoint intervals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IntegerSet {
    Interval { lo: i64, hi: i64 },
    /// `[lo1, hi1] ∪ [lo2, hi2]` with `hi1 < lo2`.
    TwoIntervals { lo1: i64, hi1: i64, lo2: i64, hi2: i64 },
}

impl IntegerSet {
    pub fn interval(lo: i64, hi: i64) -> Self {
        IntegerSet::Interval { lo, hi }
    }

    /// `{a : lo ≤ |a| ≤ hi}` for `0 < lo ≤ hi`.
    pub fn symmetric_pair(lo: i64, hi: i64) -> Self {
        IntegerSet::TwoIntervals {
            lo1: -hi,
            hi1: -lo,
            lo2: lo,
            hi2: hi,
        }
    }

    fn parts(&self) -> [(i64, i64); 2] {
        match *self {
            IntegerSet::Interval { lo, hi } => [(lo, hi), (1, 0)],
            IntegerSet::TwoIntervals { lo1, hi1, lo2, hi2 } => [(lo1, hi1), (lo2, hi2)],
        }
    }

    /// Number of elements.
    pub fn len(&self) -> u64 {
        self.parts()
            .iter()
            .map(|&(lo, hi)| if hi >= lo { (hi - lo) as u64 + 1 } else { 0 })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn is_well_formed(&self) -> bool {
        match *self {
            IntegerSet::Interval { lo, hi } => lo <= hi,
            IntegerSet::TwoIntervals { lo1, hi1, lo2, hi2 } => lo1 <= hi1 && hi1 < lo2 && lo2 <= hi2,
        }
    }

    /// The `k`-th smallest element, `0 ≤ k < len`.
    pub fn nth(&self, k: u64) -> i64 {
        let mut k = k;
        for (lo, hi) in self.parts() {
            if hi < lo {
                continue;
            }
            let size = (hi - lo) as u64 + 1;
            if k < size {
                return lo + k as i64;
            }
            k -= size;
        }
        panic!("index out of range for integer set");
    }

    pub fn contains(&self, a: i64) -> bool {
        self.parts().iter().any(|&(lo, hi)| lo <= a && a <= hi)
    }

    pub fn min(&self) -> i64 {
        self.parts()[0].0
    }

    pub fn max(&self) -> i64 {
        match *self {
            IntegerSet::Interval { hi, .. } => hi,
            IntegerSet::TwoIntervals { hi2, .. } => hi2,
        }
    }

    pub fn max_abs(&self) -> i64 {
        self.min().abs().max(self.max().abs())
    }

    pub fn is_interval(&self) -> bool {
        matches!(self, IntegerSet::Interval { .. })
    }

    pub fn is_symmetric(&self) -> bool {
        match *self {
            IntegerSet::Interval { lo, hi } => lo == -hi,
            IntegerSet::TwoIntervals { lo1, hi1, lo2, hi2 } => lo1 == -hi2 && hi1 == -lo2,
        }
    }

    /// Whether the set has an element in the real interval `[a, b]`.
    fn meets(&self, a: f64, b: f64) -> bool {
        self.parts().iter().any(|&(lo, hi)| {
            let l = (lo as f64).max(a.ceil());
            let h = (hi as f64).min(b.floor());
            hi >= lo && l <= h
        })
    }
}

impl fmt::Display for IntegerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            IntegerSet::Interval { lo, hi } => write!(f, "[{lo}, {hi}]"),
            IntegerSet::TwoIntervals { lo1, hi1, lo2, hi2 } => write!(f, "[{lo1}, {hi1}] u [{lo2}, {hi2}]"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    P,
    Q,
}

/// A product set `A₁ × ⋯ × Aₙ ⊂ ℤⁿ` with parameters `(N, n, K₁, K₂, K₃, δ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleSet {
    pub big_n: i64,
    pub n: usize,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub delta: f64,
    pub variant: Variant,
    pub sets: Vec<IntegerSet>,
}

/// The clause of the admissibility definition a violation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Clause {
    /// Parameter ranges: `N, n ≥ 1`, `K₃ > K₂ > K₁ > 1`, `0 < δ < 1/4`.
    Params,
    /// Number and shape of the coordinate sets.
    Structure,
    /// `|A₁|⋯|Aₙ| ≤ (K₃N)ⁿ`.
    Size,
    /// `max |a| ≤ nN`.
    MaxAbs,
    /// `A_i` an interval of size at least `2N+1` for `i > 2δn`.
    Tail,
    P1,
    P2,
    Q1,
    Q2,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Clause::Params => "params",
            Clause::Structure => "structure",
            Clause::Size => "size",
            Clause::MaxAbs => "max-abs",
            Clause::Tail => "tail",
            Clause::P1 => "P1",
            Clause::P2 => "P2",
            Clause::Q1 => "Q1",
            Clause::Q2 => "Q2",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub clause: Clause,
    /// 1-based coordinate, when the clause is about one coordinate.
    pub coordinate: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.coordinate {
            Some(i) => write!(f, "({}) at A_{i}: {}", self.clause, self.detail),
            None => write!(f, "({}): {}", self.clause, self.detail),
        }
    }
}

impl AdmissibleSet {
    pub fn coordinate_sets(&self) -> &[IntegerSet] {
        &self.sets
    }

    /// Number of early pairs, `⌊δn⌋`.
    pub fn early_pairs(&self) -> usize {
        (self.delta * self.n as f64 + 1e-9).floor().max(0.0) as usize
    }

    /// `log |A|`.
    pub fn ln_size(&self) -> f64 {
        self.sets.iter().map(|s| (s.len() as f64).ln()).sum()
    }

    /// Every violated clause; empty iff the set is admissible.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        macro_rules! push {
            ($clause:expr, $coordinate:expr, $detail:expr $(,)?) => {
                out.push(Violation {
                    clause: $clause,
                    coordinate: $coordinate,
                    detail: $detail,
                })
            };
        }
        let nn = self.big_n as f64;
        let n = self.n;
        if self.big_n < 1 || n < 1 {
            push!(Clause::Params, None, format!("N = {} and n = {n} must be positive", self.big_n));
        }
        let ks_ok = [self.k1, self.k2, self.k3].iter().all(|k| k.is_finite())
            && 1.0 < self.k1
            && self.k1 < self.k2
            && self.k2 < self.k3;
        if !ks_ok {
            push!(
                Clause::Params,
                None,
                format!("need K3 > K2 > K1 > 1, got ({}, {}, {})", self.k1, self.k2, self.k3),
            );
        }
        if !(self.delta > 0.0 && self.delta < 0.25) {
            push!(Clause::Params, None, format!("delta = {} not in (0, 1/4)", self.delta));
        }
        if self.sets.len() != n {
            push!(Clause::Structure, None, format!("{} coordinate sets for n = {n}", self.sets.len()));
            return out;
        }
        for (i, s) in self.sets.iter().enumerate() {
            if !s.is_well_formed() {
                push!(Clause::Structure, Some(i + 1), format!("{s} is empty or overlapping"));
            }
        }
        if out.iter().any(|v| v.clause == Clause::Structure) {
            return out;
        }

        let bound = n as f64 * (self.k3 * nn).ln();
        let ln_size = self.ln_size();
        if ln_size > bound + 1e-12 * bound.abs().max(1.0) {
            push!(
                Clause::Size,
                None,
                format!("ln|A| = {ln_size:.6} exceeds n ln(K3 N) = {bound:.6}"),
            );
        }
        let max_abs = n as i64 * self.big_n;
        for (i, s) in self.sets.iter().enumerate() {
            if s.max_abs() > max_abs {
                push!(Clause::MaxAbs, Some(i + 1), format!("{s} leaves [-nN, nN] = [-{max_abs}, {max_abs}]"));
            }
        }
        let interval_ok = |s: &IntegerSet| s.is_interval() && s.len() >= 2 * self.big_n as u64 + 1;
        let tail_start = 2.0 * self.delta * n as f64;
        for (i, s) in self.sets.iter().enumerate() {
            if (i + 1) as f64 > tail_start + 1e-9 && !interval_ok(s) {
                push!(Clause::Tail, Some(i + 1), format!("{s} is not an interval of size >= 2N+1"));
            }
        }
        for k in 1..=self.early_pairs() {
            let (even, odd) = (2 * k, 2 * k - 1);
            if even > n {
                push!(Clause::Structure, Some(even), "early pair runs past n".into());
                break;
            }
            let (a_even, a_odd) = (&self.sets[even - 1], &self.sets[odd - 1]);
            match self.variant {
                Variant::P => {
                    let lim = self.k1 * nn;
                    if !interval_ok(a_even) || (a_even.min() as f64) < -lim || (a_even.max() as f64) > lim {
                        push!(Clause::P1, Some(even), format!("{a_even} is not an interval of size >= 2N+1 in [-K1 N, K1 N]"));
                    }
                    let inner = self.k2 * nn;
                    if !a_odd.is_symmetric() || a_odd.len() < 2 * self.big_n as u64 || a_odd.meets(-inner, inner) {
                        push!(Clause::P2, Some(odd), format!("{a_odd} is not symmetric of size >= 2N avoiding [-K2 N, K2 N]"));
                    }
                }
                Variant::Q => {
                    let (lo, hi) = (self.k1 * nn, self.k2 * nn);
                    let inside = |s: &IntegerSet, a: f64, b: f64| (s.min() as f64) >= a && (s.max() as f64) <= b;
                    if !interval_ok(a_even) || !inside(a_even, lo, hi) {
                        push!(Clause::Q1, Some(even), format!("{a_even} is not an interval of size >= 2N+1 in [K1 N, K2 N]"));
                    }
                    if !interval_ok(a_odd) || !inside(a_odd, -hi, -lo) {
                        push!(Clause::Q2, Some(odd), format!("{a_odd} is not an interval of size >= 2N+1 in [-K2 N, -K1 N]"));
                    }
                }
            }
        }
        out
    }

    pub fn is_admissible(&self) -> bool {
        self.validate().is_empty()
    }

    pub fn contains(&self, x: &LatticePoint) -> bool {
        x.len() == self.n && self.sets.iter().zip(x.coords()).all(|(s, &a)| s.contains(a))
    }
}

/// An admissible set built by rescaling a unit vector with a decomposition witness.
#[derive(Clone, Debug, PartialEq)]
pub struct RescaledAdmissible {
    pub set: AdmissibleSet,
    /// `permutation[j]` is the original index placed at position `j`.
    pub permutation: Vec<usize>,
    /// The scale `D`; `point = round(D · x ∘ permutation)`.
    pub scale: f64,
    pub point: LatticePoint,
}

/// Rescales `x` by `D` and builds an admissible set containing the rounded point.
///
/// The first `2k` positions pair one index of each witness set, where `k` is as large
/// as both sets and `δ = k/n < 1/4` allow. The remaining coordinates get intervals of
/// size `2N+1` centred at the rounded value. Fails when the data do not admit such a
/// construction at this `N` (for instance when `max |a| ≤ nN` cannot hold).
pub fn admissible_from_witness(
    x: &UnitVector,
    witness: &DecompositionWitness,
    big_n: i64,
) -> Result<RescaledAdmissible> {
    let n = x.len();
    if big_n < 2 {
        return Err(Error::param("N must be at least 2"));
    }
    let k = witness
        .index_set_1
        .len()
        .min(witness.index_set_2.len())
        .min(n.saturating_sub(1) / 4);
    if k == 0 {
        return Err(Error::Validation(format!(
            "witness sets too small for an early pair at n = {n}"
        )));
    }
    let first: Vec<usize> = witness.index_set_1[..k].to_vec();
    let second: Vec<usize> = witness.index_set_2[..k].to_vec();
    let mut permutation = Vec::with_capacity(n);
    for (&a, &b) in first.iter().zip(&second) {
        // Position 2i-1 (1-based) holds the second set, position 2i the first.
        permutation.push(b);
        permutation.push(a);
    }
    let used: std::collections::HashSet<usize> = permutation.iter().copied().collect();
    permutation.extend((0..n).filter(|i| !used.contains(i)));

    let sqrt_n = (n as f64).sqrt();
    let nn = big_n as f64;
    let xs = x.coords();
    let scaled = |set: &[usize]| -> Vec<f64> { set.iter().map(|&i| xs[i].abs() * sqrt_n).collect() };
    let (s1, s2) = (scaled(&first), scaled(&second));
    let fmax = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let fmin = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);

    let (scale, k1, k2, early): (f64, f64, f64, Box<dyn Fn(bool) -> IntegerSet>) = match witness.case {
        WitnessCase::P => {
            let (a, b, c) = (fmax(&s1), fmin(&s2), fmax(&s2));
            if b <= a {
                return Err(Error::Validation("P witness has no gap between its sets".into()));
            }
            let d = 3.0 * nn * sqrt_n / (b - a);
            let k1 = 1.5f64.max((d * a / sqrt_n + 1.0) / nn);
            let k2 = k1 + 1.0;
            let inner = (k1 * nn).floor() as i64;
            let lo = (k2 * nn).floor() as i64 + 1;
            let hi = ((d * c / sqrt_n).ceil() as i64).max(lo + big_n - 1);
            (d, k1, k2, Box::new(move |even| {
                if even {
                    IntegerSet::interval(-inner, inner)
                } else {
                    IntegerSet::symmetric_pair(lo, hi)
                }
            }))
        }
        WitnessCase::Q => {
            let all: Vec<f64> = s1.iter().chain(&s2).cloned().collect();
            let (lo, hi) = (fmin(&all), fmax(&all));
            if lo <= 0.0 {
                return Err(Error::Validation("Q witness contains a zero coordinate".into()));
            }
            let d = 2.0 * nn * sqrt_n / lo;
            let k1 = 1.5;
            let k2 = (d * hi / sqrt_n / nn).max(k1) + 3.0;
            let (a, b) = ((k1 * nn).ceil() as i64, (k2 * nn).floor() as i64);
            (d, k1, k2, Box::new(move |even| {
                if even {
                    IntegerSet::interval(a, b)
                } else {
                    IntegerSet::interval(-b, -a)
                }
            }))
        }
    };

    let point: Vec<i64> = permutation.iter().map(|&i| (scale * xs[i]).round() as i64).collect();
    let mut sets = Vec::with_capacity(n);
    for (j, &c) in point.iter().enumerate() {
        if j < 2 * k {
            sets.push(early(j % 2 == 1));
        } else {
            sets.push(IntegerSet::interval(c - big_n, c + big_n));
        }
    }
    let mean_ln = sets.iter().map(|s| (s.len() as f64).ln()).sum::<f64>() / n as f64;
    let k3 = (k2 + 1.0).max(mean_ln.exp() / nn * (1.0 + 1e-9));
    let set = AdmissibleSet {
        big_n,
        n,
        k1,
        k2,
        k3,
        delta: k as f64 / n as f64,
        variant: match witness.case {
            WitnessCase::P => Variant::P,
            WitnessCase::Q => Variant::Q,
        },
        sets,
    };
    let violations = set.validate();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Error::Validation(format!("rescaled set is not admissible: {}", list.join("; "))));
    }
    let point = LatticePoint::new(point);
    if !set.contains(&point) {
        return Err(Error::Internal("rescaled point escaped its admissible set".into()));
    }
    Ok(RescaledAdmissible {
        set,
        permutation,
        scale,
        point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(n: usize, big_n: i64) -> AdmissibleSet {
        AdmissibleSet {
            big_n,
            n,
            k1: 2.0,
            k2: 3.0,
            k3: 5.0,
            delta: 0.2,
            variant: Variant::P,
            sets: vec![IntegerSet::interval(-big_n, big_n); n],
        }
    }

    #[test]
    fn integer_set_basics() {
        let s = IntegerSet::symmetric_pair(3, 5);
        assert_eq!(s.len(), 6);
        assert_eq!((0..6).map(|k| s.nth(k)).collect::<Vec<_>>(), vec![-5, -4, -3, 3, 4, 5]);
        assert!(s.is_symmetric());
        assert!(!s.contains(0));
        assert!(s.meets(2.5, 3.0));
        assert!(!s.meets(-2.9, 2.9));
        assert_eq!(IntegerSet::interval(2, 1).len(), 0);
    }

    #[test]
    fn vacuous_early_clauses() {
        let mut a = base(2, 3);
        a.delta = 0.2; // δn = 0.4 < 1/2: no early pairs
        assert!(a.validate().is_empty(), "{:?}", a.validate());
    }

    #[test]
    fn oversized_product_names_size_clause() {
        let mut a = base(2, 3);
        a.k3 = 2.0;
        a.k2 = 1.9;
        a.k1 = 1.5;
        a.sets[0] = IntegerSet::interval(-6, 6);
        let v = a.validate();
        assert!(v.iter().any(|v| v.clause == Clause::Size), "{v:?}");
    }

    #[test]
    fn wrong_sign_names_q2() {
        let mut a = base(8, 2);
        a.variant = Variant::Q;
        a.delta = 0.125; // one early pair: A_1 and A_2
        a.k1 = 1.5;
        a.k2 = 4.0; // [K1 N, K2 N] = [3, 8]
        a.sets[1] = IntegerSet::interval(3, 7);
        a.sets[0] = IntegerSet::interval(3, 7); // should lie in [-8, -3]
        let v = a.validate();
        assert!(v.iter().any(|v| v.clause == Clause::Q2 && v.coordinate == Some(1)), "{v:?}");
        assert!(!v.iter().any(|v| v.clause == Clause::Q1), "{v:?}");
        a.sets[0] = IntegerSet::interval(-7, -3);
        assert!(a.validate().is_empty(), "{:?}", a.validate());
    }
}
