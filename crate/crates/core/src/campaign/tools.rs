//! Single-object verbs: Lévy values, thresholds, rounding, the smoothing demo and
//! exhaustive enumeration.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use serde_json::json;

use super::counting::params_of;
use super::report::{CampaignReport, DetailTable, EstimateRow};
use super::runner::{binomial_ci, RunOptions};
use crate::anticoncentration::{build_atoms, levy_exact, levy_mc, threshold_from_atoms, threshold_mc};
use crate::error::{Error, Result};
use crate::linalg::singularity_polynomial;
use crate::model::{derive_stream, sub_seed, Config, DiscreteDensity, ExperimentConfig, UnitVector, WeightModel};
use crate::rounding::randomized_round;
use crate::sampling::LatticePoint;
use crate::smoothing::{
    build_step_record, eval_f_direct, eval_f_recursive, inversion_experiment, product_identity_check, AdmissibleSet,
    IntegerSet, InversionSettings, StepRecord, Variant,
};

fn model_p(model: &WeightModel) -> Option<f64> {
    match model {
        WeightModel::IidBernoulli { p } | WeightModel::SliceWindow { p, .. } => Some(p.to_f64()),
        WeightModel::Slice { .. } => None,
    }
}

fn report(config: &Config, experiment: &str, estimates: Vec<EstimateRow>) -> CampaignReport {
    CampaignReport {
        experiment: experiment.into(),
        params: params_of(config),
        estimates,
        baselines: Vec::new(),
        summary: serde_json::Map::new(),
        seed: config.seed,
        detail: None,
    }
}

fn ratio_string(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

fn row(config: &Config, experiment: &str, n: usize, p: Option<f64>, trials: u64, estimate: f64, ci: f64) -> EstimateRow {
    EstimateRow {
        experiment: experiment.into(),
        n,
        p,
        trials,
        estimate,
        ci_halfwidth: ci,
        baseline_exact: None,
        baseline_formula: None,
        seed: config.seed,
        wall_ms: 0,
    }
}

/// `L(Σ bᵢxᵢ, r)`, exactly when `trials = 0`, otherwise by Monte Carlo with the exact
/// value attached as a baseline when it fits the atom budget.
pub fn run_levy(config: &Config, opts: &RunOptions) -> Result<CampaignReport> {
    let ExperimentConfig::Levy(cfg) = &config.experiment else {
        return Err(Error::param("not a levy configuration"));
    };
    let n = cfg.x.len();
    let p = model_p(&cfg.model);
    opts.install(|| -> Result<CampaignReport> {
        let exact = match build_atoms(&cfg.x, &cfg.model, cfg.atom_budget as f64, true) {
            Ok(atoms) => Some(levy_exact(&atoms, cfg.r)?),
            Err(Error::Budget { .. }) if cfg.trials > 0 => None,
            Err(e) => return Err(e),
        };
        let mut summary = serde_json::Map::new();
        if let Some(v) = exact.as_ref().and_then(|e| e.value_exact.as_ref()) {
            summary.insert("exact".into(), json!(ratio_string(v)));
        }
        let estimate = if cfg.trials == 0 {
            let e = exact.clone().expect("exact branch");
            row(config, "levy", n, p, 0, e.value, 0.0)
        } else {
            let z = config.constants.tolerances.ci_z;
            let mc = levy_mc(&cfg.x, cfg.r, &cfg.model, cfg.trials, config.seed, z)?;
            let mut r = row(config, "levy", n, p, cfg.trials, mc.value, mc.ci_halfwidth);
            r.baseline_exact = exact.map(|e| e.value);
            r
        };
        let mut rep = report(config, "levy", vec![estimate]);
        rep.summary = summary;
        Ok(rep)
    })?
}

/// `T_{p,γ}(x/‖x‖, L)`.
pub fn run_threshold(config: &Config, opts: &RunOptions) -> Result<CampaignReport> {
    let ExperimentConfig::Threshold(cfg) = &config.experiment else {
        return Err(Error::param("not a threshold configuration"));
    };
    let x = UnitVector::normalize(&cfg.x)?;
    let n = x.len();
    let l = cfg.l.unwrap_or(config.constants.l_threshold);
    let model = WeightModel::SliceWindow { p: cfg.p, gamma: cfg.gamma };
    opts.install(|| -> Result<CampaignReport> {
        let t = if cfg.trials == 0 {
            threshold_from_atoms(&build_atoms(x.coords(), &model, cfg.atom_budget as f64, false)?, l)?
        } else {
            threshold_mc(&x, l, cfg.p, cfg.gamma, cfg.trials, config.seed)?
        };
        let mut rep = report(config, "threshold", vec![row(config, "threshold", n, Some(cfg.p.to_f64()), cfg.trials, t, 0.0)]);
        rep.summary.insert("L".into(), json!(l));
        rep.summary.insert("T_sqrt_n".into(), json!(t * (n as f64).sqrt()));
        Ok(rep)
    })?
}

/// Randomized rounding of `y`, repeated over independent instances.
pub fn run_round(config: &Config, opts: &RunOptions) -> Result<CampaignReport> {
    let ExperimentConfig::Round(cfg) = &config.experiment else {
        return Err(Error::param("not a round configuration"));
    };
    let n = cfg.y.len();
    let results = opts.install(|| {
        use rayon::prelude::*;
        (0..cfg.instances)
            .into_par_iter()
            .map(|k| {
                randomized_round(
                    &cfg.y,
                    cfg.lambda,
                    &cfg.model,
                    cfg.mu,
                    &config.constants,
                    &mut derive_stream(config.seed, k),
                    cfg.max_attempts,
                )
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut detail = DetailTable::new(&["instance", "attempts", "r1", "r2", "r3", "r4", "failed", "y_prime"]);
    for (k, r) in results.iter().enumerate() {
        detail.push(vec![
            k.to_string(),
            r.attempts.to_string(),
            r.checks.r1.to_string(),
            r.checks.r2.as_str().into(),
            r.checks.r3.as_str().into(),
            r.checks.r4.to_string(),
            r.failed.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
            r.y_prime.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
        ]);
    }
    let successes = results.iter().filter(|r| r.succeeded()).count();
    let frac = if results.is_empty() { 0.0 } else { successes as f64 / results.len() as f64 };
    let z = config.constants.tolerances.ci_z;
    let mut rep = report(
        config,
        "round",
        vec![row(config, "round", n, model_p(&cfg.model), cfg.instances, frac, binomial_ci(frac, cfg.instances, z))],
    );
    let min_r3 = results.iter().filter_map(|r| r.r3_ratio).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
    rep.summary.insert("successes".into(), json!(successes));
    rep.summary.insert("min_r3_ratio".into(), json!(min_r3));
    rep.summary.insert(
        "mean_attempts".into(),
        json!(results.iter().map(|r| r.attempts as f64).sum::<f64>() / results.len().max(1) as f64),
    );
    rep.detail = Some(detail);
    Ok(rep)
}

/// Outcome of the exact checks on one random `(f, X, s, ℓ)` instance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IdentityCheck {
    pub recursion_matches_direct: bool,
    pub product_identity: bool,
    pub h_monotone: bool,
}

/// Random exact density, lattice point and `(s, ℓ)` drawn from `rng`.
pub fn random_instance<R: Rng + ?Sized>(max_ell: usize, rng: &mut R) -> Result<(DiscreteDensity, LatticePoint, usize, usize)> {
    let ell = rng.gen_range(0..=max_ell);
    let s = rng.gen_range(0..=ell);
    let len = rng.gen_range(1..=6);
    let mut weights: Vec<u64> = (0..len).map(|_| rng.gen_range(0..10)).collect();
    weights[0] += 1;
    let f = DiscreteDensity::exact_from_weights(rng.gen_range(-3..=3), &weights)?;
    let x = LatticePoint::new((0..ell.max(1)).map(|_| rng.gen_range(-6..=6)).collect());
    Ok((f, x, s, ell))
}

/// Recursion against the direct average at every point of the support (and one step
/// beyond it), then the step record at the leftmost support point.
pub fn check_identities(f: &DiscreteDensity, x: &LatticePoint, s: usize, ell: usize) -> Result<IdentityCheck> {
    let tables = eval_f_recursive::<BigRational>(f, x, s, ell)?;
    let support = tables.function(s, ell).cloned().unwrap_or_default();
    let (lo, hi) = match (support.keys().next(), support.keys().next_back()) {
        (Some(&a), Some(&b)) => (a - 1, b + 1),
        _ => return Err(Error::Internal("averaged density has empty support".into())),
    };
    let mut recursion_matches_direct = true;
    for t in lo..=hi {
        let direct: BigRational = eval_f_direct(f, x, s, ell, t)?;
        if direct != tables.get(s as i64, ell, t) {
            recursion_matches_direct = false;
        }
    }
    let record: StepRecord<BigRational> = build_step_record(f, x, s, ell, lo + 1)?;
    let (lhs, rhs) = product_identity_check(&record);
    let h_monotone = record.h_seq.windows(2).all(|w| w[0] >= w[1]);
    Ok(IdentityCheck {
        recursion_matches_direct,
        product_identity: lhs == rhs,
        h_monotone,
    })
}

/// Exact smoothing identities on random instances, then the inversion experiment on the
/// box `[−N, N]ⁿ`.
pub fn run_smooth_demo(config: &Config, opts: &RunOptions) -> Result<CampaignReport> {
    let ExperimentConfig::SmoothDemo(cfg) = &config.experiment else {
        return Err(Error::param("not a smooth-demo configuration"));
    };
    if cfg.n < 3 || cfg.big_n < 1 {
        return Err(Error::param("smooth-demo needs n >= 3 and N >= 1"));
    }
    let inst_seed = sub_seed(config.seed, 0);
    let checks = opts.install(|| {
        use rayon::prelude::*;
        (0..cfg.instances)
            .into_par_iter()
            .map(|k| {
                let (f, x, s, ell) = random_instance(cfg.max_ell, &mut derive_stream(inst_seed, k))?;
                check_identities(&f, &x, s, ell)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let frac = |pick: fn(&IdentityCheck) -> bool| {
        if checks.is_empty() {
            0.0
        } else {
            checks.iter().filter(|c| pick(c)).count() as f64 / checks.len() as f64
        }
    };
    let mut rows = vec![
        row(config, "smooth-recursion", cfg.max_ell, None, cfg.instances, frac(|c| c.recursion_matches_direct), 0.0),
        row(config, "smooth-product-identity", cfg.max_ell, None, cfg.instances, frac(|c| c.product_identity), 0.0),
        row(config, "smooth-h-monotone", cfg.max_ell, None, cfg.instances, frac(|c| c.h_monotone), 0.0),
    ];
    let big_n = cfg.big_n;
    let set = AdmissibleSet {
        big_n,
        n: cfg.n,
        k1: 2.0,
        k2: 3.0,
        k3: 4.0,
        delta: (0.5 / cfg.n as f64).min(0.2),
        variant: Variant::P,
        sets: vec![IntegerSet::interval(-big_n, big_n); cfg.n],
    };
    let settings = InversionSettings {
        p: cfg.p,
        gamma: cfg.gamma,
        l: cfg.l,
        samples: cfg.samples,
        seed: sub_seed(config.seed, 1),
        atom_budget: 1e7,
        mc_trials: 10_000,
        z: config.constants.tolerances.ci_z,
    };
    let inv = opts.install(|| inversion_experiment(&set, &settings))??;
    rows.push(row(config, "inversion", cfg.n, Some(cfg.p.to_f64()), cfg.samples, inv.fraction, inv.ci_halfwidth));
    let mut detail = DetailTable::new(&["sample_id", "levy_value", "method", "exceeds_threshold"]);
    for r in &inv.rows {
        detail.push(vec![
            r.sample_id.to_string(),
            r.levy_value.to_string(),
            r.method.as_str().into(),
            r.exceeds_threshold.to_string(),
        ]);
    }
    let mut rep = report(config, "smooth-demo", rows);
    rep.summary.insert("lipschitz_eta".into(), json!(1.0 / (cfg.n as f64).sqrt()));
    rep.detail = Some(detail);
    Ok(rep)
}

/// The exhaustive singularity polynomial, evaluated at the requested `p`.
pub fn run_enumerate(config: &Config, opts: &RunOptions) -> Result<CampaignReport> {
    let ExperimentConfig::Enumerate(cfg) = &config.experiment else {
        return Err(Error::param("not an enumerate configuration"));
    };
    let poly = opts.install(|| singularity_polynomial(cfg.n))??;
    let total = 1u64 << (cfg.n * cfg.n);
    let mut rows = Vec::new();
    let mut values = serde_json::Map::new();
    for p in &cfg.p_values {
        let q = poly.evaluate_prob(*p);
        values.insert(p.to_string(), json!(ratio_string(&q)));
        let mut r = row(config, "enumerate", cfg.n, Some(p.to_f64()), total, q.to_f64().unwrap_or(0.0), 0.0);
        r.baseline_exact = q.to_f64();
        rows.push(r);
    }
    let mut rep = report(config, "enumerate", rows);
    rep.summary.insert(
        "counts".into(),
        json!(poly.counts.iter().map(|c| c.to_string()).collect::<Vec<_>>()),
    );
    rep.summary.insert("exact".into(), serde_json::Value::Object(values));
    Ok(rep)
}
