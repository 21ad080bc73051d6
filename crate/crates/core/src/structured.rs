//! Almost-constant and almost-elementary vectors, and the decomposition of vectors that
//! are neither into two separated groups of coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::UnitVector;

/// Slack used for closed-window comparisons on floating coordinates.
const WINDOW_TOL: f64 = 1e-12;

/// Parameters `δ` and `ρ` of the almost-constant class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsParams {
    pub delta: f64,
    pub rho: f64,
}

impl ConsParams {
    pub fn new(delta: f64, rho: f64) -> Result<Self> {
        let p = ConsParams { delta, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let open = |v: f64| v > 0.0 && v < 1.0;
        if !open(self.delta) || !open(self.rho) {
            return Err(Error::param(format!(
                "delta = {} and rho = {} must lie in (0, 1)",
                self.delta, self.rho
            )));
        }
        Ok(())
    }
}

/// Decides whether at least `(1−δ)n` coordinates lie within `ρ/√n` of a common value.
///
/// Slides a closed window of width `2ρ/√n` over the sorted coordinates. The witness is
/// the midpoint of the extreme coordinates of the fullest window, the leftmost on ties.
pub fn cons_membership(x: &UnitVector, params: ConsParams) -> (bool, Option<f64>) {
    let n = x.len();
    if n == 0 {
        return (false, None);
    }
    let mut sorted = x.coords().to_vec();
    sorted.sort_by(f64::total_cmp);
    let width = 2.0 * params.rho / (n as f64).sqrt();
    let (mut best, mut best_lambda) = (0usize, 0.0);
    let mut j = 0;
    for i in 0..n {
        j = j.max(i);
        while j + 1 < n && sorted[j + 1] - sorted[i] <= width + WINDOW_TOL {
            j += 1;
        }
        if j - i + 1 > best {
            best = j - i + 1;
            best_lambda = (sorted[i] + sorted[j]) / 2.0;
        }
    }
    if best as f64 >= (1.0 - params.delta) * n as f64 - 1e-9 {
        (true, Some(best_lambda))
    } else {
        (false, None)
    }
}

/// Smallest 0-based `i` with `‖x − e_i‖₂ ≤ δ`.
pub fn coord_membership(x: &UnitVector, delta: f64) -> Option<usize> {
    let norm_sq: f64 = x.coords().iter().map(|v| v * v).sum();
    x.coords()
        .iter()
        .position(|&xi| (norm_sq - 2.0 * xi + 1.0).max(0.0).sqrt() <= delta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WitnessCase {
    /// One set near zero, the other separated from it in absolute value.
    P,
    /// One set strictly positive, the other strictly negative.
    Q,
}

/// Which construction produced a witness.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum DecompositionRule {
    /// Many coordinates below `ρ/(10√n)`.
    SmallCoordinates,
    /// Few small coordinates, both signs well represented.
    BothSigns,
    /// One sign dominates; `ell0` is the first level reaching the count, `negated` if
    /// the vector was flipped to make the dominant sign positive.
    OneSign { ell0: usize, negated: bool },
    /// None of the above produced nonempty sets; the best split found in the data.
    Search,
}

/// Two index sets separated in the sense of the case, with the parameters certifying it.
///
/// `P`: `|x_i| ≤ κ/√n` on set 1 and `(κ+ν′)/√n < |x_i| ≤ κ′/√n` on set 2.
/// `Q`: `κ/√n < x_i < κ′/√n` on set 1 and `−κ′/√n < x_i < −κ/√n` on set 2.
/// Both sets have at least `νn` elements. Indices are 0-based and increasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionWitness {
    pub case: WitnessCase,
    pub kappa: f64,
    pub kappa_prime: f64,
    pub nu: f64,
    pub nu_prime: f64,
    pub index_set_1: Vec<usize>,
    pub index_set_2: Vec<usize>,
    pub rule: DecompositionRule,
}

impl DecompositionWitness {
    /// Every violated condition, as text; empty when the witness is sound for `x`.
    pub fn check(&self, x: &UnitVector) -> Vec<String> {
        let n = x.len();
        let sqrt_n = (n as f64).sqrt();
        let xs = x.coords();
        let mut bad = Vec::new();
        if !(self.kappa > 0.0 && self.kappa_prime > 0.0 && self.nu > 0.0 && self.nu < 1.0) {
            bad.push(format!(
                "parameters out of range: kappa={} kappa'={} nu={}",
                self.kappa, self.kappa_prime, self.nu
            ));
        }
        if self.case == WitnessCase::P && !(self.nu_prime > 0.0) {
            bad.push(format!("nu' = {} is not positive", self.nu_prime));
        }
        for (name, set) in [("set 1", &self.index_set_1), ("set 2", &self.index_set_2)] {
            if (set.len() as f64) < self.nu * n as f64 - 1e-9 {
                bad.push(format!("{name} has {} < nu*n elements", set.len()));
            }
            if set.windows(2).any(|w| w[0] >= w[1]) || set.iter().any(|&i| i >= n) {
                bad.push(format!("{name} is not an increasing list of indices"));
            }
        }
        if self.index_set_1.iter().any(|i| self.index_set_2.binary_search(i).is_ok()) {
            bad.push("index sets overlap".into());
        }
        let (k, kp, nup) = (self.kappa, self.kappa_prime, self.nu_prime);
        for &i in &self.index_set_1 {
            let v = xs[i] * sqrt_n;
            let ok = match self.case {
                WitnessCase::P => v.abs() <= k,
                WitnessCase::Q => k < v && v < kp,
            };
            if !ok {
                bad.push(format!("coordinate {i} (scaled {v}) breaks the set 1 bound"));
            }
        }
        for &i in &self.index_set_2 {
            let v = xs[i] * sqrt_n;
            let ok = match self.case {
                WitnessCase::P => k + nup < v.abs() && v.abs() <= kp,
                WitnessCase::Q => -kp < v && v < -k,
            };
            if !ok {
                bad.push(format!("coordinate {i} (scaled {v}) breaks the set 2 bound"));
            }
        }
        bad
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Decomposition {
    AlmostConstant { lambda: f64 },
    Witness(DecompositionWitness),
}

/// Classifies `x` as almost constant or produces a verified `P`/`Q` witness.
///
/// With `r₀ = ρ/(10√n)` and `I₀ = {i : |x_i| ≤ 4/√(δn)}` the rules are tried in order:
/// many small coordinates in `I₀`; both signs well represented among the rest; one
/// dominant sign, split at the first multiple of `r₀` holding `δn/16` coordinates. When
/// a rule yields an empty set the data are searched for the best split directly.
pub fn nonconstant_decompose(x: &UnitVector, params: ConsParams) -> Result<Decomposition> {
    params.validate()?;
    if params.delta >= 0.25 || params.rho >= 0.25 {
        return Err(Error::param("decomposition needs delta, rho < 1/4"));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::param("decomposition needs n >= 2"));
    }
    if let (true, Some(lambda)) = cons_membership(x, params) {
        return Ok(Decomposition::AlmostConstant { lambda });
    }
    let witness = literal_witness(x, params).or_else(|| search_witness(x)).ok_or_else(|| {
        Error::Internal("non-constant vector admits no separated split".into())
    })?;
    let bad = witness.check(x);
    if !bad.is_empty() {
        return Err(Error::Internal(format!("witness failed its own check: {}", bad.join("; "))));
    }
    Ok(Decomposition::Witness(witness))
}

fn make(
    case: WitnessCase,
    kappa: f64,
    kappa_prime: f64,
    nu_prime: f64,
    s1: Vec<usize>,
    s2: Vec<usize>,
    n: usize,
    rule: DecompositionRule,
) -> Option<DecompositionWitness> {
    if s1.is_empty() || s2.is_empty() {
        return None;
    }
    let nu = s1.len().min(s2.len()) as f64 / n as f64;
    Some(DecompositionWitness {
        case,
        kappa,
        kappa_prime,
        nu,
        nu_prime,
        index_set_1: s1,
        index_set_2: s2,
        rule,
    })
}

fn literal_witness(x: &UnitVector, params: ConsParams) -> Option<DecompositionWitness> {
    let ConsParams { delta, rho } = params;
    let n = x.len();
    let nf = n as f64;
    let sqrt_n = nf.sqrt();
    let xs = x.coords();
    let r0 = rho / (10.0 * sqrt_n);
    let cap = 4.0 / (delta * nf).sqrt();
    let quota = delta * nf / 16.0;
    let in_i0 = |i: &usize| xs[*i].abs() <= cap;
    let select = |pred: &dyn Fn(f64) -> bool| -> Vec<usize> { (0..n).filter(in_i0).filter(|&i| pred(xs[i])).collect() };

    let small = select(&|v| v.abs() < r0);
    if small.len() as f64 >= quota {
        let far = select(&|v| v.abs() >= rho / sqrt_n);
        let w = make(
            WitnessCase::P,
            rho / 10.0,
            4.0 / delta.sqrt(),
            rho / 2.0,
            small,
            far,
            n,
            DecompositionRule::SmallCoordinates,
        );
        if w.is_some() {
            return w;
        }
    }
    let pos = select(&|v| v >= r0);
    let neg = select(&|v| v <= -r0);
    if pos.len() as f64 >= quota && neg.len() as f64 >= quota {
        let w = make(
            WitnessCase::Q,
            rho / 20.0,
            8.0 / delta.sqrt(),
            0.0,
            pos,
            neg,
            n,
            DecompositionRule::BothSigns,
        );
        if w.is_some() {
            return w;
        }
    }
    let positives = xs.iter().filter(|&&v| v > 0.0).count();
    let negated = (positives as f64) < nf / 2.0;
    let sign = if negated { -1.0 } else { 1.0 };
    let ys: Vec<f64> = xs.iter().map(|v| sign * v).collect();
    let dominant = ys.iter().filter(|&&v| v > 0.0).count();
    if (dominant as f64) < (1.0 - delta / 4.0) * nf {
        return None;
    }
    let max = ys.iter().cloned().fold(0.0, f64::max);
    let mut ell0 = 1usize;
    loop {
        let count = ys.iter().filter(|&&v| v >= 0.0 && v < ell0 as f64 * r0).count();
        if count as f64 >= quota {
            break;
        }
        if ell0 as f64 * r0 > max {
            return None;
        }
        ell0 += 1;
    }
    let lower: Vec<usize> = (0..n).filter(|&i| ys[i] >= 0.0 && ys[i] < ell0 as f64 * r0).collect();
    let upper: Vec<usize> = (0..n).filter(|&i| ys[i] <= cap && ys[i] > (ell0 + 2) as f64 * r0).collect();
    make(
        WitnessCase::P,
        ell0 as f64 * rho / 10.0,
        4.0 / delta.sqrt(),
        rho / 10.0,
        lower,
        upper,
        n,
        DecompositionRule::OneSign { ell0, negated },
    )
}

/// Best `P` split at a gap of the sorted `|x_i|√n`, or the sign split for `Q`, whichever
/// has the larger `ν`; ties go to `P`.
fn search_witness(x: &UnitVector) -> Option<DecompositionWitness> {
    let n = x.len();
    let sqrt_n = (n as f64).sqrt();
    let xs = x.coords();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].abs().total_cmp(&xs[b].abs()).then(a.cmp(&b)));
    let a: Vec<f64> = order.iter().map(|&i| xs[i].abs() * sqrt_n).collect();
    let top = a[n - 1];
    let mut best_p: Option<(f64, usize)> = None;
    for k in 1..n {
        let gap = a[k] - a[k - 1];
        if gap <= 0.0 {
            continue;
        }
        let score = k.min(n - k) as f64 * gap;
        if best_p.map_or(true, |(s, _)| score > s) {
            best_p = Some((score, k));
        }
    }
    let p = best_p.and_then(|(_, k)| {
        let gap = a[k] - a[k - 1];
        let mut s1 = order[..k].to_vec();
        let mut s2 = order[k..].to_vec();
        s1.sort_unstable();
        s2.sort_unstable();
        make(
            WitnessCase::P,
            a[k - 1] + gap / 4.0,
            top,
            gap / 2.0,
            s1,
            s2,
            n,
            DecompositionRule::Search,
        )
    });
    let pos: Vec<usize> = (0..n).filter(|&i| xs[i] > 0.0).collect();
    let neg: Vec<usize> = (0..n).filter(|&i| xs[i] < 0.0).collect();
    let q = if pos.is_empty() || neg.is_empty() {
        None
    } else {
        let lo = pos.iter().chain(&neg).map(|&i| xs[i].abs() * sqrt_n).fold(f64::INFINITY, f64::min);
        make(WitnessCase::Q, lo / 2.0, 2.0 * top, 0.0, pos, neg, n, DecompositionRule::Search)
    };
    match (p, q) {
        (Some(p), Some(q)) => Some(if q.nu > p.nu { q } else { p }),
        (p, q) => p.or(q),
    }
}
