use std::collections::BTreeMap;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::{binomial_u64, DiscreteDensity};
use crate::sampling::LatticePoint;

/// Arithmetic needed by the averaging recursion. Implemented for exact rationals and `f64`.
pub trait Scalar: Clone + Debug + PartialOrd + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn ratio(num: u64, den: u64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn is_zero(&self) -> bool;
    fn mass(f: &DiscreteDensity, t: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// `self ≥ other`; the float implementation allows a relative slack of 1e−12.
    fn at_least(&self, other: &Self) -> bool;
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn mass(f: &DiscreteDensity, t: i64) -> Self {
        f.mass_exact(t)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(0.0)
    }
    fn at_least(&self, other: &Self) -> bool {
        self >= other
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn mass(f: &DiscreteDensity, t: i64) -> Self {
        f.mass(t)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn at_least(&self, other: &Self) -> bool {
        *self >= *other - 1e-12 * other.abs()
    }
}

/// Budget for the number of slice vectors averaged by [`eval_f_direct`].
pub const DIRECT_BUDGET: u64 = 10_000_000;

fn check_args(x: &LatticePoint, s: usize, ell: usize) -> Result<()> {
    if ell > x.len() {
        return Err(Error::param(format!("ell = {ell} exceeds dim X = {}", x.len())));
    }
    if s > ell {
        return Err(Error::param(format!("s = {s} exceeds ell = {ell}")));
    }
    Ok(())
}

/// `f_{A,s,ℓ}(t)`: the average of `f(t + v₁X₁ + ⋯ + v_ℓX_ℓ)` over all `v` with `s` ones.
pub fn eval_f_direct<S: Scalar>(
    f: &DiscreteDensity,
    x: &LatticePoint,
    s: usize,
    ell: usize,
    t: i64,
) -> Result<S> {
    check_args(x, s, ell)?;
    let count = binomial_u64(ell, s).unwrap_or(u64::MAX);
    if count > DIRECT_BUDGET {
        return Err(Error::budget("direct slice average", count as f64, DIRECT_BUDGET as f64));
    }
    let xs = &x.coords()[..ell];
    let mut total = S::zero();
    // Lexicographic enumeration of s-subsets of [ell].
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        let shift: i64 = idx.iter().map(|&i| xs[i]).sum();
        total = total.add(&S::mass(f, t + shift));
        let Some(pos) = (0..s).rev().find(|&k| idx[k] < ell - s + k) else {
            break;
        };
        idx[pos] += 1;
        for k in pos + 1..s {
            idx[k] = idx[k - 1] + 1;
        }
    }
    Ok(total.mul(&S::ratio(1, count)))
}

/// A finitely supported function on ℤ; absent keys are zero.
pub type SparseFn<S> = BTreeMap<i64, S>;

/// All `f_{A,s′,ℓ′}` for `0 ≤ ℓ′ ≤ ℓ` and `0 ≤ s′ ≤ min(ℓ′, s)`.
#[derive(Clone, Debug)]
pub struct FTables<S> {
    s: usize,
    levels: Vec<Vec<SparseFn<S>>>,
}

impl<S: Scalar> FTables<S> {
    pub fn ell(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// The stored function, if `(s′, ℓ′)` is in range.
    pub fn function(&self, s_prime: usize, ell_prime: usize) -> Option<&SparseFn<S>> {
        self.levels.get(ell_prime)?.get(s_prime)
    }

    /// `f_{A,s′,ℓ′}(t)`. Out-of-range `s′ < 0` or `s′ > ℓ′` evaluates to zero.
    pub fn get(&self, s_prime: i64, ell_prime: usize, t: i64) -> S {
        if s_prime < 0 {
            return S::zero();
        }
        self.function(s_prime as usize, ell_prime)
            .and_then(|m| m.get(&t).cloned())
            .unwrap_or_else(S::zero)
    }
}

/// Builds every `f_{A,s′,ℓ′}` with the recursion
/// `f_{s′,ℓ′}(t) = (1 − s′/ℓ′) f_{s′,ℓ′−1}(t) + (s′/ℓ′) f_{s′−1,ℓ′−1}(t + X_ℓ′)`.
///
/// A term whose coefficient is zero is never looked up, and exact zeros are dropped
/// from the supports.
pub fn eval_f_recursive<S: Scalar>(
    f: &DiscreteDensity,
    x: &LatticePoint,
    s: usize,
    ell: usize,
) -> Result<FTables<S>> {
    check_args(x, s, ell)?;
    let base: SparseFn<S> = (0..f.len() as i64)
        .map(|i| f.support_offset() + i)
        .map(|t| (t, S::mass(f, t)))
        .filter(|(_, m)| !m.is_zero())
        .collect();
    let mut levels: Vec<Vec<SparseFn<S>>> = vec![vec![base]];
    for lp in 1..=ell {
        let shift = x.coords()[lp - 1];
        let prev = &levels[lp - 1];
        let mut row = Vec::with_capacity(lp.min(s) + 1);
        for sp in 0..=lp.min(s) {
            let mut out: SparseFn<S> = BTreeMap::new();
            if sp < lp {
                let c = S::ratio((lp - sp) as u64, lp as u64);
                for (&t, v) in &prev[sp] {
                    out.insert(t, c.mul(v));
                }
            }
            if sp > 0 {
                let c = S::ratio(sp as u64, lp as u64);
                for (&u, v) in &prev[sp - 1] {
                    let term = c.mul(v);
                    out.entry(u - shift)
                        .and_modify(|acc| *acc = acc.add(&term))
                        .or_insert(term);
                }
            }
            out.retain(|_, v| !v.is_zero());
            row.push(out);
        }
        levels.push(row);
    }
    Ok(FTables { s, levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn direct_examples() {
        let f = DiscreteDensity::point_mass(0);
        let x = LatticePoint::new(vec![1, 2]);
        let v: BigRational = eval_f_direct(&f, &x, 1, 2, -1).unwrap();
        assert_eq!(v, q(1, 2));
        let g = DiscreteDensity::exact_from_weights(-2, &[1, 2, 3, 4]).unwrap();
        let x = LatticePoint::new(vec![1, -1, 3]);
        for t in -5..5 {
            let s0: BigRational = eval_f_direct(&g, &x, 0, 3, t).unwrap();
            assert_eq!(s0, g.mass_exact(t));
            let full: BigRational = eval_f_direct(&g, &x, 3, 3, t).unwrap();
            assert_eq!(full, g.mass_exact(t + 3));
        }
    }

    #[test]
    fn direct_refuses_over_budget() {
        let f = DiscreteDensity::point_mass(0);
        let x = LatticePoint::new(vec![1; 40]);
        assert!(matches!(eval_f_direct::<f64>(&f, &x, 20, 40, 0), Err(Error::Budget { .. })));
    }

    #[test]
    fn single_shift() {
        let f = DiscreteDensity::point_mass(0);
        let x = LatticePoint::new(vec![5]);
        let tables: FTables<BigRational> = eval_f_recursive(&f, &x, 1, 1).unwrap();
        let m = tables.function(1, 1).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.get(&-5), Some(&q(1, 1)));
    }

    #[test]
    fn s_zero_is_f() {
        let g = DiscreteDensity::exact_from_weights(3, &[2, 0, 5]).unwrap();
        let x = LatticePoint::new(vec![4, -7, 1, 2]);
        let tables: FTables<BigRational> = eval_f_recursive(&g, &x, 0, 4).unwrap();
        for lp in 0..=4 {
            for t in 0..8 {
                assert_eq!(tables.get(0, lp, t), g.mass_exact(t));
            }
        }
    }

    #[test]
    fn float_mode_tracks_exact_mode() {
        let g = DiscreteDensity::two_sided_geometric(9, 6).unwrap();
        let x = LatticePoint::new(vec![2, -3, 1, 5, 4]);
        let exact: FTables<BigRational> = eval_f_recursive(&g, &x, 2, 5).unwrap();
        let float: FTables<f64> = eval_f_recursive(&g, &x, 2, 5).unwrap();
        for t in -20..20 {
            let a = Scalar::to_f64(&exact.get(2, 5, t));
            let b = float.get(2, 5, t);
            assert!((a - b).abs() <= 1e-15, "{a} vs {b}");
        }
    }
}
