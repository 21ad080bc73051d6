use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

fn require_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::param("matrix has non-finite entries"));
    }
    Ok(())
}

/// Smallest singular value of a square matrix, via bidiagonalization and implicit QR (nalgebra).
pub fn least_singular_value(m: &DMatrix<f64>) -> Result<f64> {
    require_finite(m)?;
    if m.nrows() != m.ncols() {
        return Err(Error::param(format!(
            "least_singular_value needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.is_empty() {
        return Err(Error::param("empty matrix"));
    }
    let sv = m.clone().singular_values();
    Ok(sv.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0))
}

const POWER_ITER_CAP: usize = 5_000;

/// Largest singular value by power iteration on `MᵀM`.
///
/// The start vector is a fixed pseudo-random sequence, so results are reproducible.
/// The Rayleigh quotient converges quadratically in the eigenvalue ratio; if the cap
/// is reached before it settles, the value falls back to a full SVD.
pub fn operator_norm(m: &DMatrix<f64>) -> Result<f64> {
    require_finite(m)?;
    if m.is_empty() {
        return Ok(0.0);
    }
    let scale = m.amax();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let a = m / scale;
    let gram = a.transpose() * &a;
    let n = gram.nrows();
    let mut state = 0x2545_F491_4F6C_DD1Du64;
    let mut v = DVector::from_fn(n, |_, _| {
        state = crate::model::splitmix64(state);
        0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
    });
    v /= v.norm();
    let mut lambda = 0.0f64;
    for _ in 0..POWER_ITER_CAP {
        let w = &gram * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = w / norm;
        if (next - lambda).abs() <= 4.0 * f64::EPSILON * next.abs() {
            return Ok(next.max(0.0).sqrt() * scale);
        }
        lambda = next;
    }
    let sv = a.singular_values();
    Ok(sv.max() * scale)
}

/// Breakdown tolerance of the Gram–Schmidt basis, relative to the input row norm.
const BREAKDOWN_TOL: f64 = 1e-10;

/// Euclidean distance from `v` to the linear span of `rows`.
///
/// Modified Gram–Schmidt with one reorthogonalization pass; a row whose residual
/// falls below `1e−10` of its norm is treated as dependent and dropped.
pub fn dist_to_rowspan(v: &[f64], rows: &[Vec<f64>]) -> Result<f64> {
    if rows.iter().any(|r| r.len() != v.len()) {
        return Err(Error::param("dimension mismatch in dist_to_rowspan"));
    }
    if v.iter().chain(rows.iter().flatten()).any(|x| !x.is_finite()) {
        return Err(Error::param("non-finite input"));
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for row in rows {
        let norm0 = norm(row);
        if norm0 == 0.0 {
            continue;
        }
        let mut u = row.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&u, b);
                axpy(-c, b, &mut u);
            }
        }
        let nu = norm(&u);
        if nu > BREAKDOWN_TOL * norm0 {
            u.iter_mut().for_each(|x| *x /= nu);
            basis.push(u);
        }
    }
    let mut r = v.to_vec();
    for _ in 0..2 {
        for b in &basis {
            let c = dot(&r, b);
            axpy(-c, b, &mut r);
        }
    }
    Ok(norm(&r))
}

/// Distance from `v` to the column span of `a`, i.e. `min_x ‖Ax − v‖₂`.
pub fn dist_to_colspan(v: &[f64], a: &DMatrix<f64>) -> Result<f64> {
    let cols: Vec<Vec<f64>> = a.column_iter().map(|c| c.iter().cloned().collect()).collect();
    dist_to_rowspan(v, &cols)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
