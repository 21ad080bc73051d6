//! Exact samplers for every random object in the laboratory.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Matrix01, Probability, WeightModel};
use crate::smoothing::AdmissibleSet;

/// A point of `ℤⁿ`, typically drawn from an admissible set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticePoint(Vec<i64>);

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }
}

/// `n × n` matrix with iid Bernoulli(p) entries. `p ∈ {0, 1}` is allowed.
pub fn sample_bernoulli_matrix<R: Rng + ?Sized>(
    n: usize,
    p: Probability,
    rng: &mut R,
) -> Result<Matrix01> {
    sample_bernoulli_rect(n, n, p, rng)
}

/// `rows × cols` matrix with iid Bernoulli(p) entries.
pub fn sample_bernoulli_rect<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    p: Probability,
    rng: &mut R,
) -> Result<Matrix01> {
    if rows == 0 || cols == 0 {
        return Err(Error::param("matrix dimensions must be positive"));
    }
    let entries = (0..rows * cols).map(|_| p.sample(rng) as u8).collect();
    Ok(Matrix01::from_parts_unchecked(rows, cols, entries))
}

/// Uniform vector of `{0,1}ⁿ` with exactly `m` ones.
pub fn sample_slice_vector<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Vec<u8>> {
    if m > n {
        return Err(Error::param(format!("slice size {m} exceeds n = {n}")));
    }
    let mut out = vec![0u8; n];
    let mut scratch = Vec::with_capacity(n);
    fill_slice(&mut out, m, &mut scratch, rng);
    Ok(out)
}

/// Writes a uniform `m`-subset indicator into `out` using a partial Fisher–Yates shuffle.
/// Selects the smaller of the ones and the zeros, so the cost is `min(m, n − m)` draws.
pub(crate) fn fill_slice<R: Rng + ?Sized>(
    out: &mut [u8],
    m: usize,
    scratch: &mut Vec<usize>,
    rng: &mut R,
) {
    let n = out.len();
    let (k, mark, fill) = if 2 * m <= n { (m, 1, 0) } else { (n - m, 0, 1) };
    out.fill(fill);
    scratch.clear();
    scratch.extend(0..n);
    for i in 0..k {
        let j = rng.gen_range(i..n);
        scratch.swap(i, j);
        out[scratch[i]] = mark;
    }
}

/// A slice sample assembled from a base slice vector and fair swap flags on disjoint pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairedSlice {
    /// The assembled vector, uniform on the slice.
    pub vector: Vec<u8>,
    /// The base slice vector before any swap.
    pub base: Vec<u8>,
    /// `flags[j]` swaps positions `2j` and `2j + 1` (0-based).
    pub flags: Vec<bool>,
}

/// Slice sample written as `b` plus `σn` independent Ber(1/2) flags `b'_j`; flag `j`
/// exchanges the entries at positions `2j` and `2j + 1`. Swapping preserves the
/// uniform law on the slice, so the assembled vector is again uniform.
pub fn sample_paired_slice<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    sigma_n: usize,
    rng: &mut R,
) -> Result<PairedSlice> {
    if 2 * sigma_n > n {
        return Err(Error::param(format!(
            "{sigma_n} disjoint pairs do not fit in {n} coordinates"
        )));
    }
    let base = sample_slice_vector(n, m, rng)?;
    let flags: Vec<bool> = (0..sigma_n).map(|_| rng.gen::<bool>()).collect();
    let mut vector = base.clone();
    for (j, &f) in flags.iter().enumerate() {
        if f {
            vector.swap(2 * j, 2 * j + 1);
        }
    }
    Ok(PairedSlice {
        vector,
        base,
        flags,
    })
}

/// `n` independent rows, each uniform on vectors with exactly `⌊n/2⌋` ones.
pub fn sample_qn_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Matrix01> {
    if n == 0 {
        return Err(Error::param("n must be positive"));
    }
    let mut entries = vec![0u8; n * n];
    let mut scratch = Vec::with_capacity(n);
    for row in entries.chunks_exact_mut(n) {
        fill_slice(row, n / 2, &mut scratch, rng);
    }
    Ok(Matrix01::from_parts_unchecked(n, n, entries))
}

/// One draw of the Boolean weights under `model`.
///
/// The slice-window model is sampled by rejection from iid Bernoulli(p); callers that
/// loop should check the acceptance rate first with [`window_acceptance`].
pub fn sample_weights<R: Rng + ?Sized>(
    n: usize,
    model: &WeightModel,
    out: &mut [u8],
    scratch: &mut Vec<usize>,
    rng: &mut R,
) -> Result<()> {
    debug_assert_eq!(out.len(), n);
    match *model {
        WeightModel::IidBernoulli { p } => {
            for b in out.iter_mut() {
                *b = p.sample(rng) as u8;
            }
        }
        WeightModel::Slice { m } => {
            if m > n {
                return Err(Error::Model(format!("slice size {m} exceeds n = {n}")));
            }
            fill_slice(out, m, scratch, rng);
        }
        WeightModel::SliceWindow { p, .. } => {
            let (lo, hi) = model.sum_range(n)?;
            loop {
                let mut sum = 0;
                for b in out.iter_mut() {
                    *b = p.sample(rng) as u8;
                    sum += *b as usize;
                }
                if (lo..=hi).contains(&sum) {
                    break;
                }
            }
        }
    }
    Ok(())
}

/// Probability that an iid Bernoulli(p) vector falls in the model's sum window.
/// Equals 1 for the iid and slice models (no rejection).
pub fn window_acceptance(n: usize, model: &WeightModel) -> Result<f64> {
    match *model {
        WeightModel::SliceWindow { p, .. } => {
            let (lo, hi) = model.sum_range(n)?;
            let iid = WeightModel::IidBernoulli { p };
            Ok((lo..=hi)
                .map(|m| (crate::model::ln_binomial(n, m) + iid.ln_vector_weight(n, m)).exp())
                .sum())
        }
        _ => {
            model.sum_range(n)?;
            Ok(1.0)
        }
    }
}

/// Uniform point of an admissible set: coordinate `i` uniform on `A_i`, independently.
pub fn sample_admissible_point<R: Rng + ?Sized>(a: &AdmissibleSet, rng: &mut R) -> Result<LatticePoint> {
    let violations = a.validate();
    if let Some(v) = violations.first() {
        return Err(Error::Validation(format!(
            "set is not admissible ({} violations, first: {v})",
            violations.len()
        )));
    }
    Ok(sample_product_point(a, rng))
}

/// Uniform point of the product set without checking admissibility.
pub(crate) fn sample_product_point<R: Rng + ?Sized>(a: &AdmissibleSet, rng: &mut R) -> LatticePoint {
    let coords = a
        .coordinate_sets()
        .iter()
        .map(|s| s.nth(rng.gen_range(0..s.len())))
        .collect();
    LatticePoint(coords)
}
