use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Mass vector of a [`DiscreteDensity`], either exact or floating.
#[derive(Clone, Debug, PartialEq)]
pub enum Masses {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

/// A nonnegative, unit-mass function on the integers, supported on
/// `support_offset .. support_offset + masses.len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDensity {
    support_offset: i64,
    masses: Masses,
    lipschitz_eta: Option<f64>,
}

const FLOAT_MASS_TOL: f64 = 1e-12;

impl DiscreteDensity {
    /// Exact density from nonnegative rational masses summing to one.
    pub fn exact(support_offset: i64, masses: Vec<BigRational>) -> Result<Self> {
        if masses.iter().any(Signed::is_negative) {
            return Err(Error::param("negative mass"));
        }
        let total: BigRational = masses.iter().cloned().sum();
        if !total.is_one() {
            return Err(Error::param(format!("total mass {total} is not 1")));
        }
        Ok(Self {
            support_offset,
            masses: Masses::Exact(masses),
            lipschitz_eta: None,
        })
    }

    /// Exact density proportional to nonnegative integer weights.
    pub fn exact_from_weights(support_offset: i64, weights: &[u64]) -> Result<Self> {
        let total: u128 = weights.iter().map(|&w| w as u128).sum();
        if total == 0 {
            return Err(Error::Degenerate("all weights are zero".into()));
        }
        let total = BigInt::from(total);
        let masses = weights
            .iter()
            .map(|&w| BigRational::new(BigInt::from(w), total.clone()))
            .collect();
        Self::exact(support_offset, masses)
    }

    /// Floating density from nonnegative masses summing to one within 1e−12.
    pub fn float(support_offset: i64, masses: Vec<f64>) -> Result<Self> {
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::param("masses must be finite and nonnegative"));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > FLOAT_MASS_TOL {
            return Err(Error::param(format!("total mass {total} is not 1")));
        }
        Ok(Self {
            support_offset,
            masses: Masses::Float(masses),
            lipschitz_eta: None,
        })
    }

    /// Unit mass at `t`, exact.
    pub fn point_mass(t: i64) -> Self {
        Self {
            support_offset: t,
            masses: Masses::Exact(vec![BigRational::one()]),
            lipschitz_eta: None,
        }
    }

    /// The two-sided geometric family `f(t) = 2^{−|t|/√n}/ι`, truncated to
    /// `|t| ≤ radius` and renormalized, with its log-Lipschitz constant `1/√n` attached.
    pub fn two_sided_geometric(n: usize, radius: i64) -> Result<Self> {
        if n == 0 || radius < 0 {
            return Err(Error::param("n must be positive and radius nonnegative"));
        }
        let rate = 1.0 / (n as f64).sqrt();
        let raw: Vec<f64> = (-radius..=radius)
            .map(|t| (-(t.abs() as f64) * rate).exp2())
            .collect();
        let total: f64 = raw.iter().sum();
        let mut density = Self::float(-radius, raw.into_iter().map(|m| m / total).collect())?;
        density.set_lipschitz_eta(rate)?;
        Ok(density)
    }

    pub fn support_offset(&self) -> i64 {
        self.support_offset
    }

    pub fn masses(&self) -> &Masses {
        &self.masses
    }

    pub fn len(&self) -> usize {
        match &self.masses {
            Masses::Exact(m) => m.len(),
            Masses::Float(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.masses, Masses::Exact(_))
    }

    pub fn lipschitz_eta(&self) -> Option<f64> {
        self.lipschitz_eta
    }

    /// Attaches `eta` after checking that `log₂ f` is `eta`-Lipschitz on a contiguous support.
    pub fn set_lipschitz_eta(&mut self, eta: f64) -> Result<()> {
        if !(eta >= 0.0) {
            return Err(Error::param("eta must be nonnegative"));
        }
        if !self.is_log_lipschitz(eta) {
            return Err(Error::Validation(format!("log2 f is not {eta}-Lipschitz")));
        }
        self.lipschitz_eta = Some(eta);
        Ok(())
    }

    /// True when every stored mass is positive and consecutive log₂ ratios are at most `eta`.
    pub fn is_log_lipschitz(&self, eta: f64) -> bool {
        let logs: Vec<f64> = match &self.masses {
            Masses::Exact(m) => m.iter().map(|x| x.to_f64().unwrap_or(0.0)).collect(),
            Masses::Float(m) => m.clone(),
        }
        .into_iter()
        .map(f64::log2)
        .collect();
        if logs.iter().any(|l| !l.is_finite()) {
            return false;
        }
        logs.windows(2).all(|w| (w[1] - w[0]).abs() <= eta + 1e-12)
    }

    /// Exact mass at `t` (zero off the support). Float densities convert exactly from `f64`.
    pub fn mass_exact(&self, t: i64) -> BigRational {
        let Some(i) = self.index(t) else {
            return BigRational::zero();
        };
        match &self.masses {
            Masses::Exact(m) => m[i].clone(),
            Masses::Float(m) => BigRational::from_float(m[i]).unwrap_or_else(BigRational::zero),
        }
    }

    pub fn mass(&self, t: i64) -> f64 {
        let Some(i) = self.index(t) else {
            return 0.0;
        };
        match &self.masses {
            Masses::Exact(m) => m[i].to_f64().unwrap_or(0.0),
            Masses::Float(m) => m[i],
        }
    }

    /// Support points with nonzero mass.
    pub fn support(&self) -> Vec<i64> {
        (0..self.len() as i64)
            .map(|i| self.support_offset + i)
            .filter(|&t| self.mass(t) > 0.0 || !self.mass_exact(t).is_zero())
            .collect()
    }

    fn index(&self, t: i64) -> Option<usize> {
        let i = t.checked_sub(self.support_offset)?;
        (i >= 0 && (i as usize) < self.len()).then_some(i as usize)
    }
}
