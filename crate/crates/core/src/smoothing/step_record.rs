use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use super::averaging::{eval_f_recursive, FTables, Scalar};
use crate::error::{Error, Result};
use crate::model::{binomial, DiscreteDensity};
use crate::sampling::LatticePoint;

/// The averaging sequence, step record and value trace of one point `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord<S> {
    pub ell: usize,
    pub s: usize,
    /// `t_0, …, t_ℓ`.
    pub t_seq: Vec<i64>,
    /// `w_1, …, w_ℓ`, stored at indices `0..ℓ`.
    pub w_seq: Vec<u8>,
    /// `h_0, …, h_ℓ`.
    pub h_seq: Vec<S>,
}

impl<S> StepRecord<S> {
    /// `W_i = w_1 + ⋯ + w_i` for `i = 0..=ℓ`.
    pub fn partial_sums(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.ell + 1);
        out.push(0);
        for &w in &self.w_seq {
            out.push(out.last().unwrap() + w as usize);
        }
        out
    }

    /// `W̄_i = W_i / i` for `i ∈ [ℓ]`, exactly; index `i − 1` holds step `i`.
    pub fn running_fractions(&self) -> Vec<BigRational> {
        let w = self.partial_sums();
        (1..=self.ell)
            .map(|i| BigRational::new(BigInt::from(w[i]), BigInt::from(i)))
            .collect()
    }
}

/// Traces `t` down the recursion: at level `i` keep `w_i = 0` when the first term has a
/// positive coefficient and is at least `h_i`, otherwise take the shifted term.
pub fn build_step_record<S: Scalar>(
    f: &DiscreteDensity,
    x: &LatticePoint,
    s: usize,
    ell: usize,
    t: i64,
) -> Result<StepRecord<S>> {
    let tables = eval_f_recursive::<S>(f, x, s, ell)?;
    step_record_from_tables(&tables, x, t)
}

/// [`build_step_record`] reusing precomputed tables.
pub fn step_record_from_tables<S: Scalar>(tables: &FTables<S>, x: &LatticePoint, t: i64) -> Result<StepRecord<S>> {
    let (ell, s) = (tables.ell(), tables.s());
    let top = tables.get(s as i64, ell, t);
    if top.is_zero() {
        return Err(Error::param(format!("f_(s={s}, ell={ell}) vanishes at t = {t}")));
    }
    let mut t_seq = vec![0i64; ell + 1];
    let mut h_seq = vec![S::zero(); ell + 1];
    let mut w_seq = vec![0u8; ell];
    t_seq[ell] = t;
    h_seq[ell] = top;
    let mut cur_s = s;
    for i in (1..=ell).rev() {
        let (ti, hi) = (t_seq[i], h_seq[i].clone());
        let former = tables.get(cur_s as i64, i - 1, ti);
        let (w, value) = if cur_s < i && former.at_least(&hi) {
            (0u8, former)
        } else {
            let latter = tables.get(cur_s as i64 - 1, i - 1, ti + x.coords()[i - 1]);
            if cur_s == 0 || !latter.at_least(&hi) {
                return Err(Error::Internal(format!(
                    "neither branch reaches h_{i} at t = {ti}"
                )));
            }
            (1u8, latter)
        };
        w_seq[i - 1] = w;
        t_seq[i - 1] = ti + w as i64 * x.coords()[i - 1];
        h_seq[i - 1] = value;
        cur_s -= w as usize;
    }
    Ok(StepRecord {
        ell,
        s,
        t_seq,
        w_seq,
        h_seq,
    })
}

/// Both sides of `∏_{i∈[ℓ]} (1 − W̄_i)^{1−w_i} W̄_i^{w_i} = 1/C(ℓ,s)`, exactly.
pub fn product_identity_check<S>(record: &StepRecord<S>) -> (BigRational, BigRational) {
    let fractions = record.running_fractions();
    let lhs = fractions
        .iter()
        .zip(&record.w_seq)
        .fold(<BigRational as One>::one(), |acc, (wbar, &w)| {
            if w == 1 {
                acc * wbar
            } else {
                acc * (<BigRational as One>::one() - wbar)
            }
        });
    let rhs = BigRational::new(BigInt::one(), BigInt::from(binomial(record.ell, record.s)));
    (lhs, rhs)
}

/// Per-step classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepFlags {
    /// `W̄_i ∈ (λ, 1 − λ)`.
    pub robust: bool,
    /// All four probes `f_{W_i−y, i−1}(t_{i−1} + zX_i)` are at most `R/(N√n)`.
    pub drop: bool,
}

/// Robust and drop flags for every step of `record`; index `i − 1` holds step `i`.
#[allow(clippy::too_many_arguments)]
pub fn classify_steps<S: Scalar>(
    record: &StepRecord<S>,
    lambda: f64,
    r: f64,
    big_n: i64,
    n: usize,
    f: &DiscreteDensity,
    x: &LatticePoint,
) -> Result<Vec<StepFlags>> {
    if !(lambda > 0.0 && lambda < 1.0) || !(r > 0.0) || big_n < 1 || n == 0 {
        return Err(Error::param("need lambda in (0,1), R > 0, N >= 1 and n >= 1"));
    }
    let tables = eval_f_recursive::<S>(f, x, record.s, record.ell)?;
    Ok(classify_with_tables(record, lambda, r, big_n, n, &tables, x))
}

pub(crate) fn classify_with_tables<S: Scalar>(
    record: &StepRecord<S>,
    lambda: f64,
    r: f64,
    big_n: i64,
    n: usize,
    tables: &FTables<S>,
    x: &LatticePoint,
) -> Vec<StepFlags> {
    let threshold = r / (big_n as f64 * (n as f64).sqrt());
    let w = record.partial_sums();
    (1..=record.ell)
        .map(|i| {
            let wbar = w[i] as f64 / i as f64;
            let robust = wbar > lambda && wbar < 1.0 - lambda;
            let xi = x.coords()[i - 1];
            let drop = [0i64, 1].iter().all(|&y| {
                [-1i64, 1].iter().all(|&z| {
                    let v = tables.get(w[i] as i64 - y, i - 1, record.t_seq[i - 1] + z * xi);
                    v.to_f64() <= threshold
                })
            });
            StepFlags { robust, drop }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn single_step_trace() {
        let f = DiscreteDensity::point_mass(0);
        let x = LatticePoint::new(vec![5]);
        let r: StepRecord<BigRational> = build_step_record(&f, &x, 1, 1, -5).unwrap();
        assert_eq!(r.w_seq, vec![1]);
        assert_eq!(r.t_seq, vec![0, -5]);
        assert_eq!(r.h_seq, vec![q(1, 1), q(1, 1)]);
    }

    #[test]
    fn s_zero_keeps_former_branch() {
        let f = DiscreteDensity::exact_from_weights(-1, &[1, 2, 1]).unwrap();
        let x = LatticePoint::new(vec![3, 7]);
        let r: StepRecord<BigRational> = build_step_record(&f, &x, 0, 2, 0).unwrap();
        assert_eq!(r.w_seq, vec![0, 0]);
        assert_eq!(r.t_seq, vec![0, 0, 0]);
        assert!(r.h_seq.iter().all(|h| *h == q(1, 2)));
    }

    #[test]
    fn zero_value_is_a_precondition_error() {
        let f = DiscreteDensity::point_mass(0);
        let x = LatticePoint::new(vec![5]);
        assert!(build_step_record::<BigRational>(&f, &x, 1, 1, 0).is_err());
    }

    #[test]
    fn product_identity_examples() {
        let mk = |w: Vec<u8>| StepRecord::<BigRational> {
            ell: w.len(),
            s: w.iter().map(|&b| b as usize).sum(),
            t_seq: vec![0; w.len() + 1],
            w_seq: w,
            h_seq: vec![],
        };
        let (l, r) = product_identity_check(&mk(vec![0, 1, 0, 1]));
        assert_eq!(l, q(1, 6));
        assert_eq!(r, q(1, 6));
        for w in [vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]] {
            assert_eq!(product_identity_check(&mk(w)).0, q(1, 3));
        }
        let (l, r) = product_identity_check(&mk(vec![0, 0, 0]));
        assert_eq!((l, r), (q(1, 1), q(1, 1)));
    }

    #[test]
    fn robust_and_drop_flags() {
        let f = DiscreteDensity::point_mass(0);
        let x = LatticePoint::new(vec![5, 100]);
        // w = (0, 1): W̄_1 = 0, W̄_2 = 1/2.
        let r: StepRecord<BigRational> = build_step_record(&f, &x, 1, 2, -100).unwrap();
        assert_eq!(r.w_seq, vec![0, 1]);
        let flags = classify_steps(&r, 0.3, 1.0, 1, 4, &f, &x).unwrap();
        assert!(!flags[0].robust);
        assert!(flags[1].robust);
        // All probes at step 1 sit at ±5 where f vanishes.
        assert!(flags[0].drop);
    }
}
