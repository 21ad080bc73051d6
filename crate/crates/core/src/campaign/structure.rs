//! Kernel vectors of random `(n−1) × n` Bernoulli matrices: almost-constant or not, and
//! the threshold `T` of those that are not.

use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use super::counting::params_of;
use super::report::{CampaignReport, DetailTable, EstimateRow};
use super::runner::RunOptions;
use crate::anticoncentration::{build_atoms, threshold_from_atoms};
use crate::error::{Error, Result};
use crate::linalg::kernel_vector;
use crate::model::{derive_stream, sub_seed, Config, ExperimentConfig, Matrix01, WeightModel};
use crate::sampling::sample_bernoulli_rect;
use crate::structured::{cons_membership, nonconstant_decompose, ConsParams, Decomposition, WitnessCase};

pub const MAX_STRUCTURE_N: usize = 24;

/// How a sampled kernel vector was classified.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelClass {
    AlmostConstant,
    P,
    Q,
    /// `H` had rank below `n − 1`; no unique kernel direction.
    Degenerate,
}

impl KernelClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelClass::AlmostConstant => "cons",
            KernelClass::P => "P",
            KernelClass::Q => "Q",
            KernelClass::Degenerate => "degenerate",
        }
    }
}

/// One sampled matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureSample {
    pub n: usize,
    pub sample_id: u64,
    pub class: KernelClass,
    /// `T_{p,γ}(v, L)` for non-almost-constant `v`.
    pub threshold: Option<f64>,
}

/// Classifies the kernel vector of `h` and, when it is not almost constant, computes `T`.
pub fn classify_kernel(
    h: &Matrix01,
    params: ConsParams,
    model: &WeightModel,
    l: f64,
    atom_budget: f64,
) -> Result<(KernelClass, Option<f64>)> {
    let kv = kernel_vector(h)?;
    if kv.degenerate {
        return Ok((KernelClass::Degenerate, None));
    }
    let v = kv.unit;
    if cons_membership(&v, params).0 {
        return Ok((KernelClass::AlmostConstant, None));
    }
    let class = match nonconstant_decompose(&v, params)? {
        Decomposition::AlmostConstant { .. } => {
            return Err(Error::Internal("membership and decomposition disagree".into()));
        }
        Decomposition::Witness(w) => match w.case {
            WitnessCase::P => KernelClass::P,
            WitnessCase::Q => KernelClass::Q,
        },
    };
    let atoms = build_atoms(v.coords(), model, atom_budget, false)?;
    Ok((class, Some(threshold_from_atoms(&atoms, l)?)))
}

/// Per-n rows `(n, p, samples, max T√n over non-almost-constant v)` and a detail table
/// with one row per sampled matrix.
pub fn run_structure_experiment(config: &Config, opts: &RunOptions) -> Result<CampaignReport> {
    let ExperimentConfig::Structure(cfg) = &config.experiment else {
        return Err(Error::param("not a structure configuration"));
    };
    let params = ConsParams::new(cfg.delta, cfg.rho)?;
    let model = WeightModel::SliceWindow { p: cfg.p, gamma: cfg.gamma };
    let l = cfg.l.unwrap_or(config.constants.l_threshold);
    if !(l > 0.0) {
        return Err(Error::param("L must be positive"));
    }
    for &n in &cfg.ns {
        if n < 2 {
            return Err(Error::param("structure experiment needs n >= 2"));
        }
        if n > MAX_STRUCTURE_N {
            return Err(Error::budget(format!("structure experiment at n = {n}"), n as f64, MAX_STRUCTURE_N as f64));
        }
        model.sum_range(n)?;
    }
    let mut estimates = Vec::new();
    let mut summary = serde_json::Map::new();
    let mut detail = DetailTable::new(&["n", "sample_id", "class", "cons_flag", "T", "T_sqrt_n"]);
    opts.install(|| -> Result<()> {
        for (idx, &n) in cfg.ns.iter().enumerate() {
            let start = Instant::now();
            let seed = sub_seed(config.seed, idx as u64);
            let samples: Vec<StructureSample> = (0..cfg.samples)
                .into_par_iter()
                .map(|id| {
                    let h = sample_bernoulli_rect(n - 1, n, cfg.p, &mut derive_stream(seed, id))?;
                    let (class, threshold) = classify_kernel(&h, params, &model, l, cfg.atom_budget as f64)?;
                    Ok(StructureSample { n, sample_id: id, class, threshold })
                })
                .collect::<Result<_>>()?;
            let sqrt_n = (n as f64).sqrt();
            let count = |c: KernelClass| samples.iter().filter(|s| s.class == c).count();
            let max_scaled = samples
                .iter()
                .filter_map(|s| s.threshold)
                .map(|t| t * sqrt_n)
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
            for s in &samples {
                detail.push(vec![
                    n.to_string(),
                    s.sample_id.to_string(),
                    s.class.as_str().into(),
                    (s.class == KernelClass::AlmostConstant).to_string(),
                    s.threshold.map(|t| t.to_string()).unwrap_or_default(),
                    s.threshold.map(|t| (t * sqrt_n).to_string()).unwrap_or_default(),
                ]);
            }
            summary.insert(
                format!("n={n}"),
                json!({
                    "cons": count(KernelClass::AlmostConstant),
                    "P": count(KernelClass::P),
                    "Q": count(KernelClass::Q),
                    "degenerate": count(KernelClass::Degenerate),
                    "max_T_sqrt_n": max_scaled,
                }),
            );
            estimates.push(EstimateRow {
                experiment: "structure".into(),
                n,
                p: Some(cfg.p.to_f64()),
                trials: cfg.samples,
                estimate: max_scaled.unwrap_or(0.0),
                ci_halfwidth: 0.0,
                baseline_exact: None,
                baseline_formula: None,
                seed: config.seed,
                wall_ms: if opts.timing { start.elapsed().as_millis() as u64 } else { 0 },
            });
        }
        Ok(())
    })??;
    summary.insert("L".into(), json!(l));
    Ok(CampaignReport {
        experiment: "structure".into(),
        params: params_of(config),
        estimates,
        baselines: Vec::new(),
        summary,
        seed: config.seed,
        detail: Some(detail),
    })
}
