//! Exhaustive oracles: the singularity polynomial, the exact `Q_n` singularity
//! probability and the zero-line probability.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{binomial, binomial_u64, Probability};

/// Largest `n` for which all `2^{n²}` matrices are enumerated.
pub const MAX_POLYNOMIAL_N: usize = 5;

/// `counts[k]` = number of singular `n × n` 0/1 matrices with exactly `k` ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularityPolynomial {
    pub n: usize,
    #[serde(with = "decimal_strings")]
    pub counts: Vec<BigUint>,
}

impl SingularityPolynomial {
    /// `q_n(p) = Σ_k c_k p^k (1−p)^{n²−k}`, exactly.
    pub fn evaluate(&self, p: &BigRational) -> BigRational {
        let q = BigRational::one() - p;
        let total = self.n * self.n;
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| {
                BigRational::from_integer(BigInt::from(c.clone()))
                    * num_traits::pow(p.clone(), k)
                    * num_traits::pow(q.clone(), total - k)
            })
            .fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn evaluate_prob(&self, p: Probability) -> BigRational {
        self.evaluate(&p.to_rational())
    }

    pub fn total_singular(&self) -> BigUint {
        self.counts.iter().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("polynomial serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let poly: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if poly.counts.len() != poly.n * poly.n + 1 {
            return Err(Error::Parse(format!(
                "expected {} counts for n = {}",
                poly.n * poly.n + 1,
                poly.n
            )));
        }
        Ok(poly)
    }
}

mod decimal_strings {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|c| c.to_str_radix(10)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| BigUint::parse_bytes(s.as_bytes(), 10).ok_or_else(|| serde::de::Error::custom(format!("bad count {s:?}"))))
            .collect()
    }
}

/// Determinant of the `n × n` 0/1 matrix whose entry `(i, j)` is bit `i·n + j` of `mask`.
/// Bareiss in `i64`; for `n ≤ 5` every intermediate is a minor bounded by 5.
fn det_mask(mask: u32, n: usize) -> i64 {
    let mut a = [[0i64; MAX_POLYNOMIAL_N]; MAX_POLYNOMIAL_N];
    for (i, row) in a.iter_mut().enumerate().take(n) {
        for (j, e) in row.iter_mut().enumerate().take(n) {
            *e = ((mask >> (i * n + j)) & 1) as i64;
        }
    }
    let mut prev = 1i64;
    let mut sign = 1i64;
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| a[i][k] != 0) else {
            return 0;
        };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[k][k] * a[i][j] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * prev
}

/// Exact singularity polynomial by enumerating all `2^{n²}` matrices.
///
/// Refuses `n > 5` with a budget error. The mask space is split into blocks of
/// `2^16` that are counted in parallel and merged.
pub fn singularity_polynomial(n: usize) -> Result<SingularityPolynomial> {
    if n == 0 {
        return Err(Error::param("n must be positive"));
    }
    if n > MAX_POLYNOMIAL_N {
        return Err(Error::budget(
            format!("exhaustive enumeration of {n}x{n} 0/1 matrices"),
            2f64.powi((n * n) as i32),
            2f64.powi((MAX_POLYNOMIAL_N * MAX_POLYNOMIAL_N) as i32),
        ));
    }
    let bits = n * n;
    let total: u64 = 1 << bits;
    let block: u64 = 1 << 16.min(bits);
    let counts: Vec<u64> = (0..total / block)
        .into_par_iter()
        .map(|b| {
            let mut local = vec![0u64; bits + 1];
            for mask in b * block..(b + 1) * block {
                let mask = mask as u32;
                if det_mask(mask, n) == 0 {
                    local[mask.count_ones() as usize] += 1;
                }
            }
            local
        })
        .reduce(
            || vec![0u64; bits + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(SingularityPolynomial {
        n,
        counts: counts.into_iter().map(BigUint::from).collect(),
    })
}

/// Number of row tuples enumerated by [`qn_singular_exact`].
pub fn qn_enumeration_size(n: usize) -> Option<u64> {
    binomial_u64(n, n / 2)?.checked_pow(n as u32)
}

/// Exact `P[Q_n singular]`: enumerates all `C(n,⌊n/2⌋)ⁿ` tuples of central-slice rows.
pub fn qn_singular_exact(n: usize, budget: u64) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::param("n must be positive"));
    }
    let size = qn_enumeration_size(n).unwrap_or(u64::MAX);
    if size > budget || n > 8 {
        return Err(Error::budget(
            format!("exhaustive Q_{n} enumeration"),
            size as f64,
            budget as f64,
        ));
    }
    let rows: Vec<Vec<i64>> = (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == n / 2)
        .map(|m| (0..n).map(|j| ((m >> j) & 1) as i64).collect())
        .collect();
    let k = rows.len() as u64;
    let singular: u64 = (0..k)
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0u64; n];
            idx[0] = first;
            let mut count = 0u64;
            let rest = k.pow(n as u32 - 1);
            for t in 0..rest {
                let mut r = t;
                for slot in idx.iter_mut().skip(1) {
                    *slot = r % k;
                    r /= k;
                }
                let mat: Vec<Vec<i64>> = idx.iter().map(|&i| rows[i as usize].clone()).collect();
                if super::exact::exact_rank_int(&mat) < n {
                    count += 1;
                }
            }
            count
        })
        .sum();
    Ok(BigRational::new(BigInt::from(singular), BigInt::from(size)))
}

/// Probability of a zero row or zero column and its first-order term.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroLineProbability {
    pub exact: BigRational,
    /// `2n(1−p)ⁿ`.
    pub first_order: BigRational,
}

/// `P[∃ zero row or column]` of an `n × n` Bernoulli(p) matrix by inclusion–exclusion:
/// `1 − Σ_{i,j} (−1)^{i+j} C(n,i) C(n,j) (1−p)^{in + jn − ij}`.
pub fn zero_line_probability(n: usize, p: Probability) -> Result<ZeroLineProbability> {
    if n == 0 {
        return Err(Error::param("n must be positive"));
    }
    p.require_interior()?;
    let q = p.complement().to_rational();
    // Powers of q up to n² are reused many times.
    let mut pow = Vec::with_capacity(n * n + 1);
    pow.push(BigRational::one());
    for k in 1..=n * n {
        let next = &pow[k - 1] * &q;
        pow.push(next);
    }
    let binoms: Vec<BigInt> = (0..=n).map(|i| BigInt::from(binomial(n, i))).collect();
    let mut none = BigRational::zero();
    for i in 0..=n {
        for j in 0..=n {
            let term = &pow[i * n + j * n - i * j] * BigRational::from_integer(&binoms[i] * &binoms[j]);
            if (i + j) % 2 == 0 {
                none += term;
            } else {
                none -= term;
            }
        }
    }
    Ok(ZeroLineProbability {
        exact: BigRational::one() - none,
        first_order: BigRational::from_integer(BigInt::from(2 * n)) * &pow[n],
    })
}

/// `q` as an `f64`, saturating tiny values to zero.
pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn small_polynomials() {
        let p1 = singularity_polynomial(1).unwrap();
        assert_eq!(p1.counts, vec![BigUint::from(1u32), BigUint::from(0u32)]);
        assert_eq!(p1.evaluate(&r(3, 10)), r(7, 10));

        let p2 = singularity_polynomial(2).unwrap();
        let expect: Vec<BigUint> = [1u32, 4, 4, 0, 1].iter().map(|&c| BigUint::from(c)).collect();
        assert_eq!(p2.counts, expect);
        assert_eq!(p2.evaluate(&r(1, 2)), r(10, 16));
    }

    #[test]
    fn refuses_large_n() {
        let e = singularity_polynomial(6).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn mask_determinant_matches_bigint() {
        for mask in (0u32..1 << 16).step_by(97) {
            let rows: Vec<Vec<i64>> = (0..4).map(|i| (0..4).map(|j| ((mask >> (i * 4 + j)) & 1) as i64).collect()).collect();
            assert_eq!(BigInt::from(det_mask(mask, 4)), super::super::exact::determinant(&rows).unwrap());
        }
    }

    #[test]
    fn qn_small_cases() {
        assert_eq!(qn_singular_exact(1, 10).unwrap(), r(1, 1));
        assert_eq!(qn_singular_exact(2, 10).unwrap(), r(1, 2));
        assert_eq!(qn_singular_exact(3, 100).unwrap(), r(7, 9));
        assert!(qn_singular_exact(6, 1000).is_err());
    }

    #[test]
    fn zero_line_examples() {
        let p = Probability::new(3, 10).unwrap();
        assert_eq!(zero_line_probability(1, p).unwrap().exact, r(7, 10));
        assert_eq!(zero_line_probability(2, Probability::half()).unwrap().exact, r(9, 16));
        for n in 1..8 {
            let z = zero_line_probability(n, p).unwrap();
            assert!(z.exact >= num_traits::pow(r(7, 10), n));
            assert!(z.exact <= BigRational::one());
        }
    }

    #[test]
    fn polynomial_json_round_trip() {
        let p = singularity_polynomial(3).unwrap();
        let back = SingularityPolynomial::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
    }
}
