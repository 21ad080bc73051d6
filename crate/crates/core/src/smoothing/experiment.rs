use rayon::prelude::*;

use super::admissible::AdmissibleSet;
use crate::anticoncentration::{build_atoms, levy_exact, levy_mc, Method};
use crate::error::{Error, Result};
use crate::model::{derive_stream, sub_seed, Probability, WeightModel};
use crate::sampling::sample_product_point;

/// One sampled point of the admissible set.
#[derive(Clone, Debug, PartialEq)]
pub struct InversionRow {
    pub sample_id: u64,
    pub levy_value: f64,
    pub method: Method,
    pub exceeds_threshold: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InversionResult {
    pub rows: Vec<InversionRow>,
    /// Fraction of sampled points with `L_{p,γ}(Σ bᵢxᵢ, √n) ≥ L/N`.
    pub fraction: f64,
    pub ci_halfwidth: f64,
}

/// Settings of [`inversion_experiment`] beyond the set itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InversionSettings {
    pub p: Probability,
    pub gamma: f64,
    pub l: f64,
    pub samples: u64,
    pub seed: u64,
    /// Exact Lévy values are used while the atom count stays below this.
    pub atom_budget: f64,
    /// Monte Carlo trials per point otherwise.
    pub mc_trials: u64,
    pub z: f64,
}

/// Samples points `x` uniformly from `A` and records whether the window-model Lévy value
/// at radius `√n` reaches `L/N`.
pub fn inversion_experiment(a: &AdmissibleSet, settings: &InversionSettings) -> Result<InversionResult> {
    let violations = a.validate();
    if !violations.is_empty() {
        return Err(Error::Validation(format!("set is not admissible: {}", violations[0])));
    }
    if !(settings.l > 0.0) || settings.samples == 0 {
        return Err(Error::param("need L > 0 and at least one sample"));
    }
    let model = WeightModel::SliceWindow {
        p: settings.p,
        gamma: settings.gamma,
    };
    let n = a.n;
    let radius = (n as f64).sqrt();
    let cut = settings.l / a.big_n as f64;
    let point_seed = sub_seed(settings.seed, 0);
    let mc_seed = sub_seed(settings.seed, 1);
    let rows: Vec<InversionRow> = (0..settings.samples)
        .into_par_iter()
        .map(|id| {
            let x = sample_product_point(a, &mut derive_stream(point_seed, id)).to_f64();
            let est = match build_atoms(&x, &model, settings.atom_budget, false) {
                Ok(atoms) => levy_exact(&atoms, radius)?,
                Err(Error::Budget { .. }) => levy_mc(&x, radius, &model, settings.mc_trials, sub_seed(mc_seed, id), settings.z)?,
                Err(e) => return Err(e),
            };
            Ok(InversionRow {
                sample_id: id,
                levy_value: est.value,
                method: est.method,
                exceeds_threshold: est.value >= cut,
            })
        })
        .collect::<Result<_>>()?;
    let hits = rows.iter().filter(|r| r.exceeds_threshold).count();
    let fraction = hits as f64 / rows.len() as f64;
    let ci_halfwidth = settings.z * (fraction * (1.0 - fraction) / rows.len() as f64).sqrt();
    Ok(InversionResult {
        rows,
        fraction,
        ci_halfwidth,
    })
}
