use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::{Matrix01, UnitVector};

/// Rank over ℚ by fraction-free (Bareiss) elimination.
///
/// Runs on `i128` and restarts on `BigInt` if any intermediate overflows.
pub fn exact_rank(m: &Matrix01) -> usize {
    let rows: Vec<Vec<i128>> = m.rows().map(|r| r.iter().map(|&e| e as i128).collect()).collect();
    if let Some(r) = bareiss_rank_i128(rows) {
        return r;
    }
    let rows = m.rows().map(|r| r.iter().map(|&e| BigInt::from(e)).collect()).collect();
    bareiss_rank_big(rows)
}

/// Rank of an integer matrix given as rows; same algorithm as [`exact_rank`].
pub fn exact_rank_int(rows: &[Vec<i64>]) -> usize {
    let small: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&e| e as i128).collect()).collect();
    if let Some(r) = bareiss_rank_i128(small) {
        return r;
    }
    bareiss_rank_big(rows.iter().map(|r| r.iter().map(|&e| BigInt::from(e)).collect()).collect())
}

fn bareiss_rank_i128(mut a: Vec<Vec<i128>>) -> Option<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut prev: i128 = 1;
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(r, p);
        let pivot = a[r][c];
        for i in r + 1..rows {
            let lead = a[i][c];
            for j in c + 1..cols {
                let x = pivot.checked_mul(a[i][j])?;
                let y = lead.checked_mul(a[r][j])?;
                a[i][j] = x.checked_sub(y)? / prev;
            }
            a[i][c] = 0;
        }
        prev = pivot;
        r += 1;
    }
    Some(r)
}

fn bareiss_rank_big(mut a: Vec<Vec<BigInt>>) -> usize {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let pivot = a[r][c].clone();
        for i in r + 1..rows {
            let lead = a[i][c].clone();
            for j in c + 1..cols {
                let v = (&pivot * &a[i][j] - &lead * &a[r][j]) / &prev;
                a[i][j] = v;
            }
            a[i][c] = BigInt::zero();
        }
        prev = pivot;
        r += 1;
    }
    r
}

const MOD_P: u64 = (1 << 61) - 1;

fn mul_mod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % MOD_P as u128) as u64
}

fn inv_mod(a: u64) -> u64 {
    let (mut base, mut exp, mut acc) = (a, MOD_P - 2, 1u64);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base);
        }
        base = mul_mod(base, base);
        exp >>= 1;
    }
    acc
}

/// Rank modulo the Mersenne prime 2⁶¹ − 1. Never exceeds the rank over ℚ.
pub fn rank_mod_p(m: &Matrix01) -> usize {
    let (rows, cols) = (m.n_rows(), m.n_cols());
    let mut a: Vec<u64> = m.entries().iter().map(|&e| e as u64).collect();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| a[i * cols + c] != 0) else {
            continue;
        };
        if p != r {
            for j in 0..cols {
                a.swap(p * cols + j, r * cols + j);
            }
        }
        let inv = inv_mod(a[r * cols + c]);
        for i in r + 1..rows {
            let lead = a[i * cols + c];
            if lead == 0 {
                continue;
            }
            let f = mul_mod(lead, inv);
            for j in c..cols {
                let sub = mul_mod(f, a[r * cols + j]);
                let v = a[i * cols + j];
                a[i * cols + j] = if v >= sub { v - sub } else { v + MOD_P - sub };
            }
        }
        r += 1;
    }
    r
}

/// Whether a square 0/1 matrix is singular over ℚ.
///
/// Full rank modulo a large prime already proves invertibility; otherwise the exact
/// rank decides.
pub fn is_singular(m: &Matrix01) -> Result<bool> {
    if !m.is_square() {
        return Err(Error::param(format!(
            "is_singular needs a square matrix, got {}x{}",
            m.n_rows(),
            m.n_cols()
        )));
    }
    if rank_mod_p(m) == m.n_rows() {
        return Ok(false);
    }
    Ok(exact_rank(m) < m.n_rows())
}

/// Determinant of a square integer matrix by Bareiss elimination in `BigInt`.
pub fn determinant(rows: &[Vec<i64>]) -> Result<BigInt> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::param("determinant needs a square matrix"));
    }
    let mut a: Vec<Vec<BigInt>> = rows.iter().map(|r| r.iter().map(|&e| BigInt::from(e)).collect()).collect();
    let mut prev = BigInt::one();
    let mut sign = 1;
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else {
            return Ok(BigInt::zero());
        };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[k][k] * &a[i][j] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    Ok(if n == 0 { BigInt::one() } else { prev * sign })
}

/// A unit vector in the right kernel of a 0/1 matrix, with its exact integer direction.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelVector {
    /// Integer kernel vector with coprime entries and first nonzero entry positive.
    pub exact: Vec<BigInt>,
    pub unit: UnitVector,
    /// True when the kernel has dimension at least 2, so the direction is not unique.
    pub degenerate: bool,
}

/// Canonical kernel direction of an `(n−1) × n` matrix.
///
/// When the rank is `n − 1` the kernel line is unique and the sign rule fixes the
/// direction. For lower rank the first free column's basis vector is returned and
/// `degenerate` is set.
pub fn kernel_vector(h: &Matrix01) -> Result<KernelVector> {
    let (rows, n) = (h.n_rows(), h.n_cols());
    if rows + 1 != n {
        return Err(Error::param(format!(
            "kernel_vector expects (n-1) x n, got {rows}x{n}"
        )));
    }
    let mut a: Vec<Vec<BigRational>> = h
        .rows()
        .map(|r| r.iter().map(|&e| BigRational::from_integer(BigInt::from(e))).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for j in c..n {
            a[r][j] = &a[r][j] * &inv;
        }
        for i in 0..rows {
            if i == r || a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].clone();
            for j in c..n {
                let v = &a[i][j] - &f * &a[r][j];
                a[i][j] = v;
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free = (0..n)
        .find(|c| !pivots.contains(c))
        .expect("an (n-1) x n matrix has a free column");
    let mut v = vec![BigRational::zero(); n];
    v[free] = BigRational::one();
    for (row, &pc) in pivots.iter().enumerate() {
        v[pc] = -a[row][free].clone();
    }
    let exact = clear_denominators(&v);
    let floats: Vec<f64> = exact.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    let unit = UnitVector::normalize(&floats)?;
    Ok(KernelVector {
        exact,
        unit,
        degenerate: pivots.len() < rows,
    })
}

/// Scales a rational vector to coprime integers with the first nonzero entry positive.
fn clear_denominators(v: &[BigRational]) -> Vec<BigInt> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let mut ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() {
        for x in &mut ints {
            *x /= &g;
        }
    }
    if ints.iter().find(|x| !x.is_zero()).is_some_and(Signed::is_negative) {
        for x in &mut ints {
            *x = -x.clone();
        }
    }
    ints
}

/// `H·v` computed exactly.
pub fn apply_exact(h: &Matrix01, v: &[BigInt]) -> Vec<BigInt> {
    h.rows()
        .map(|row| {
            row.iter()
                .zip(v)
                .filter(|(&e, _)| e == 1)
                .fold(BigInt::zero(), |acc, (_, x)| acc + x)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_stream;
    use crate::model::Probability;
    use crate::sampling::sample_bernoulli_rect;

    /// Laplace expansion along the first row; independent of the elimination code.
    fn cofactor_det(a: &[Vec<i64>]) -> i64 {
        let n = a.len();
        if n == 1 {
            return a[0][0];
        }
        (0..n)
            .map(|j| {
                let minor: Vec<Vec<i64>> = a[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &x)| x).collect())
                    .collect();
                let sign = if j % 2 == 0 { 1 } else { -1 };
                sign * a[0][j] * cofactor_det(&minor)
            })
            .sum()
    }

    fn m(rows: &[&[u8]]) -> Matrix01 {
        Matrix01::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn rank_examples() {
        for n in 1..6 {
            assert_eq!(exact_rank(&Matrix01::identity(n)), n);
            let ones = Matrix01::new(n, n, vec![1; n * n]).unwrap();
            assert_eq!(exact_rank(&ones), 1);
        }
        let c = m(&[&[1, 1, 0], &[0, 1, 1], &[1, 0, 1]]);
        assert_eq!(cofactor_det(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]), 2);
        assert_eq!(exact_rank(&c), 3);
        assert_eq!(determinant(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]).unwrap(), BigInt::from(2));
    }

    #[test]
    fn singular_examples() {
        assert!(!is_singular(&Matrix01::identity(2)).unwrap());
        assert!(is_singular(&m(&[&[1, 1], &[1, 1]])).unwrap());
        assert!(is_singular(&Matrix01::zeros(3, 3)).unwrap());
        assert!(is_singular(&Matrix01::zeros(2, 3)).is_err());
    }

    #[test]
    fn rank_agrees_with_cofactor_determinant() {
        for trial in 0..2000 {
            let mut rng = derive_stream(11, trial);
            let n = 1 + (trial as usize % 6);
            let a = sample_bernoulli_rect(n, n, Probability::half(), &mut rng).unwrap();
            let rows: Vec<Vec<i64>> = a.rows().map(|r| r.iter().map(|&e| e as i64).collect()).collect();
            let det = cofactor_det(&rows);
            assert_eq!(is_singular(&a).unwrap(), det == 0);
            assert_eq!(determinant(&rows).unwrap(), BigInt::from(det));
        }
    }

    #[test]
    fn big_path_matches_small_path() {
        // 40x40 random matrices push Bareiss intermediates past i128 only rarely, so
        // compare the two implementations directly.
        for trial in 0..20 {
            let mut rng = derive_stream(12, trial);
            let a = sample_bernoulli_rect(30, 30, Probability::half(), &mut rng).unwrap();
            let big = bareiss_rank_big(a.rows().map(|r| r.iter().map(|&e| BigInt::from(e)).collect()).collect());
            assert_eq!(exact_rank(&a), big);
            assert!(rank_mod_p(&a) <= big);
        }
    }

    #[test]
    fn i128_overflow_falls_back() {
        // Hadamard-type growth: a 64x64 0/1 matrix with large minors.
        let mut rng = derive_stream(13, 0);
        let a = sample_bernoulli_rect(64, 64, Probability::half(), &mut rng).unwrap();
        let rows: Vec<Vec<i128>> = a.rows().map(|r| r.iter().map(|&e| e as i128).collect()).collect();
        assert!(bareiss_rank_i128(rows).is_none());
        assert_eq!(exact_rank(&a), 64);
    }

    #[test]
    fn kernel_examples() {
        let k = kernel_vector(&m(&[&[1, 1]])).unwrap();
        assert_eq!(k.exact, vec![BigInt::from(1), BigInt::from(-1)]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((k.unit.coords()[0] - s).abs() < 1e-15);
        assert!((k.unit.coords()[1] + s).abs() < 1e-15);
        assert!(!k.degenerate);

        let k = kernel_vector(&m(&[&[1, 0, 0], &[0, 1, 0]])).unwrap();
        assert_eq!(k.unit.coords(), &[0.0, 0.0, 1.0]);

        let k = kernel_vector(&m(&[&[1, 1, 0], &[1, 1, 0]])).unwrap();
        assert!(k.degenerate);
        assert!(apply_exact(&m(&[&[1, 1, 0], &[1, 1, 0]]), &k.exact).iter().all(Zero::is_zero));
    }

    #[test]
    fn random_kernels_have_zero_residual() {
        for trial in 0..500 {
            let mut rng = derive_stream(14, trial);
            let n = 2 + trial as usize % 12;
            let h = sample_bernoulli_rect(n - 1, n, Probability::half(), &mut rng).unwrap();
            let k = kernel_vector(&h).unwrap();
            assert!(apply_exact(&h, &k.exact).iter().all(Zero::is_zero));
            assert!(k.exact.iter().any(|x| !x.is_zero()));
            let norm: f64 = k.unit.coords().iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-12);
            assert_eq!(k.degenerate, exact_rank(&h) < n - 1);
        }
    }
}
