//! Trial-counting campaigns: Bernoulli singularity, `Q_n` singularity and block residuals.

use std::time::Instant;

use num_traits::ToPrimitive;
use serde_json::json;

use super::report::{Baseline, CampaignReport, EstimateRow};
use super::runner::{binomial_ci, count_trials, Checkpoint, RunOptions};
use crate::error::{Error, Result};
use crate::linalg::{
    dist_to_colspan, exact_rank_int, is_singular, qn_enumeration_size, qn_singular_exact, singularity_polynomial,
    zero_line_probability, MAX_POLYNOMIAL_N,
};
use crate::model::{sub_seed, Config, ResidualTarget};
use crate::sampling::{sample_bernoulli_matrix, sample_bernoulli_rect, sample_qn_matrix};

pub const MAX_CAMPAIGN_N: usize = 64;
pub const MAX_TRIALS: u64 = 10_000_000;

/// Enumeration budget for the exhaustive `Q_n` baseline.
pub const QN_EXACT_BUDGET: u64 = 100_000_000;

fn check_point(n: usize, trials: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n must be positive"));
    }
    if n > MAX_CAMPAIGN_N {
        return Err(Error::budget(format!("campaign at n = {n}"), n as f64, MAX_CAMPAIGN_N as f64));
    }
    if trials > MAX_TRIALS {
        return Err(Error::budget("trials per point", trials as f64, MAX_TRIALS as f64));
    }
    Ok(())
}

fn elapsed_ms(start: Instant, opts: &RunOptions) -> u64 {
    if opts.timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

fn ratio_string(q: &num_rational::BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub(crate) fn params_of(config: &Config) -> serde_json::Value {
    serde_json::to_value(config).expect("config serializes")
}

fn checkpoint_for(dir: Option<&std::path::PathBuf>, label: String, config: &Config) -> Option<Checkpoint> {
    dir.map(|d| Checkpoint::new(d, &label, config.seed, &config.hash_hex()))
}

/// Monte Carlo `q_n(p)` per point, with the zero-line probability and `2n(1−p)ⁿ` alongside.
pub fn run_singularity_campaign(config: &Config, opts: &RunOptions) -> Result<CampaignReport> {
    let crate::model::ExperimentConfig::Singularity(cfg) = &config.experiment else {
        return Err(Error::param("not a singularity configuration"));
    };
    for pt in &cfg.points {
        check_point(pt.n, pt.trials)?;
        pt.p.require_interior()?;
    }
    let z = config.constants.tolerances.ci_z;
    let mut estimates = Vec::new();
    let mut baselines = Vec::new();
    let mut summary = serde_json::Map::new();
    opts.install(|| -> Result<()> {
        for (idx, pt) in cfg.points.iter().enumerate() {
            let start = Instant::now();
            let seed = sub_seed(config.seed, idx as u64);
            let cp = checkpoint_for(cfg.checkpoint_dir.as_ref(), format!("singularity-{idx}"), config);
            let hits = count_trials(seed, pt.trials, cp.as_ref(), |rng| {
                is_singular(&sample_bernoulli_matrix(pt.n, pt.p, rng)?)
            })?;
            let zero = zero_line_probability(pt.n, pt.p)?;
            let estimate = if pt.trials == 0 { 0.0 } else { hits as f64 / pt.trials as f64 };
            let exhaustive = if pt.n <= cfg.exact_max_n.min(MAX_POLYNOMIAL_N) {
                Some(singularity_polynomial(pt.n)?.evaluate_prob(pt.p))
            } else {
                None
            };
            let wall_ms = elapsed_ms(start, opts);
            estimates.push(EstimateRow {
                experiment: "singularity".into(),
                n: pt.n,
                p: Some(pt.p.to_f64()),
                trials: pt.trials,
                estimate,
                ci_halfwidth: binomial_ci(estimate, pt.trials, z),
                baseline_exact: exhaustive.as_ref().and_then(|q| q.to_f64()),
                baseline_formula: zero.first_order.to_f64(),
                seed: config.seed,
                wall_ms,
            });
            // The exact lower bound, as its own row so every column keeps one meaning.
            estimates.push(EstimateRow {
                experiment: "zero-line".into(),
                n: pt.n,
                p: Some(pt.p.to_f64()),
                trials: 0,
                estimate: zero.exact.to_f64().unwrap_or(0.0),
                ci_halfwidth: 0.0,
                baseline_exact: zero.exact.to_f64(),
                baseline_formula: zero.first_order.to_f64(),
                seed: config.seed,
                wall_ms: 0,
            });
            let zero_value = zero.exact.to_f64().unwrap_or(0.0);
            if zero_value > 0.0 {
                summary.insert(format!("ratio_to_zero_line[n={},p={}]", pt.n, pt.p), json!(estimate / zero_value));
            }
            baselines.push(Baseline {
                name: "zero-line".into(),
                n: pt.n,
                p: Some(pt.p.to_string()),
                value: zero_value,
                exact: Some(ratio_string(&zero.exact)),
            });
            if let Some(q) = exhaustive {
                baselines.push(Baseline {
                    name: "exhaustive".into(),
                    n: pt.n,
                    p: Some(pt.p.to_string()),
                    value: q.to_f64().unwrap_or(0.0),
                    exact: Some(ratio_string(&q)),
                });
            }
        }
        Ok(())
    })??;
    Ok(CampaignReport {
        experiment: "singularity".into(),
        params: params_of(config),
        estimates,
        baselines,
        summary,
        seed: config.seed,
        detail: None,
    })
}

/// Monte Carlo `P[Q_n singular]` per point, with the exhaustive value for small `n`.
pub fn run_qn_campaign(config: &Config, opts: &RunOptions) -> Result<CampaignReport> {
    let crate::model::ExperimentConfig::Qn(cfg) = &config.experiment else {
        return Err(Error::param("not a qn configuration"));
    };
    for pt in &cfg.points {
        check_point(pt.n, pt.trials)?;
    }
    let z = config.constants.tolerances.ci_z;
    let mut estimates = Vec::new();
    let mut baselines = Vec::new();
    let mut trend = serde_json::Map::new();
    opts.install(|| -> Result<()> {
        for (idx, pt) in cfg.points.iter().enumerate() {
            let start = Instant::now();
            let seed = sub_seed(config.seed, idx as u64);
            let cp = checkpoint_for(cfg.checkpoint_dir.as_ref(), format!("qn-{idx}"), config);
            let hits = count_trials(seed, pt.trials, cp.as_ref(), |rng| is_singular(&sample_qn_matrix(pt.n, rng)?))?;
            let estimate = if pt.trials == 0 { 0.0 } else { hits as f64 / pt.trials as f64 };
            let exact = if pt.n <= cfg.exact_max_n
                && qn_enumeration_size(pt.n).is_some_and(|s| s <= QN_EXACT_BUDGET)
            {
                let q = qn_singular_exact(pt.n, QN_EXACT_BUDGET)?;
                baselines.push(Baseline {
                    name: "exhaustive".into(),
                    n: pt.n,
                    p: None,
                    value: q.to_f64().unwrap_or(0.0),
                    exact: Some(ratio_string(&q)),
                });
                q.to_f64()
            } else {
                None
            };
            if estimate > 0.0 {
                trend.insert(format!("log_p_over_n[{}]", pt.n), json!(estimate.ln() / pt.n as f64));
            }
            estimates.push(EstimateRow {
                experiment: "qn".into(),
                n: pt.n,
                p: None,
                trials: pt.trials,
                estimate,
                ci_halfwidth: binomial_ci(estimate, pt.trials, z),
                baseline_exact: exact,
                baseline_formula: Some(0.5f64.powi(pt.n as i32)),
                seed: config.seed,
                wall_ms: elapsed_ms(start, opts),
            });
        }
        Ok(())
    })??;
    Ok(CampaignReport {
        experiment: "qn".into(),
        params: params_of(config),
        estimates,
        baselines,
        summary: trend,
        seed: config.seed,
        detail: None,
    })
}

fn residual_target(target: &ResidualTarget, n: usize) -> Result<Vec<f64>> {
    let v = match target {
        ResidualTarget::Ones => vec![1.0; n],
        ResidualTarget::FirstBasis => {
            let mut v = vec![0.0; n];
            v[0] = 1.0;
            v
        }
        ResidualTarget::Explicit { v } => {
            if v.len() != n {
                return Err(Error::param(format!("explicit target has length {}, n = {n}", v.len())));
            }
            v.clone()
        }
    };
    if v.iter().map(|x| x * x).sum::<f64>() < 1.0 - 1e-12 {
        return Err(Error::param("target must have norm at least 1"));
    }
    Ok(v)
}

/// Label of the threshold `2^{−k}` in the `experiment` column.
pub fn residual_label(k: f64) -> String {
    format!("block-residual[2^-{k}]")
}

/// Frequency of `min_x ‖Ax − v‖₂ ≤ 2^{−e·n}` for random `n × (n−1)` Bernoulli `A`.
///
/// Trials below the smallest threshold are cross-checked exactly when `v` is integral:
/// the summary counts how many of them have `v` in the rational column span.
pub fn run_block_residual_experiment(config: &Config, opts: &RunOptions) -> Result<CampaignReport> {
    let crate::model::ExperimentConfig::BlockResidual(cfg) = &config.experiment else {
        return Err(Error::param("not a block-residual configuration"));
    };
    cfg.p.require_interior()?;
    if cfg.threshold_exponents.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::param("threshold exponents must be positive"));
    }
    let z = config.constants.tolerances.ci_z;
    let mut estimates = Vec::new();
    let mut summary = serde_json::Map::new();
    for &n in &cfg.ns {
        check_point(n, cfg.trials)?;
        if n < 2 {
            return Err(Error::param("block residual needs n >= 2"));
        }
        residual_target(&cfg.target, n)?;
    }
    opts.install(|| -> Result<()> {
        for (idx, &n) in cfg.ns.iter().enumerate() {
            let v = residual_target(&cfg.target, n)?;
            let integral = v.iter().all(|x| x.fract() == 0.0);
            let seed = sub_seed(config.seed, idx as u64);
            let start = Instant::now();
            // Distances are recomputed per threshold from the same streams, so every
            // threshold sees identical matrices.
            let residual = |rng: &mut crate::model::RandomSource| -> Result<(f64, Vec<Vec<i64>>)> {
                let a = sample_bernoulli_rect(n, n - 1, cfg.p, rng)?;
                let d = dist_to_colspan(&v, &a.to_real())?;
                let rows = (0..n).map(|i| a.row(i).iter().map(|&b| b as i64).collect()).collect();
                Ok((d, rows))
            };
            let mut thresholds: Vec<f64> = cfg.threshold_exponents.iter().map(|e| e * n as f64).collect();
            thresholds.sort_by(|a, b| b.total_cmp(a));
            for &k in &thresholds {
                let cut = 2f64.powf(-k);
                let hits = count_trials(seed, cfg.trials, None, |rng| Ok(residual(rng)?.0 <= cut))?;
                let estimate = if cfg.trials == 0 { 0.0 } else { hits as f64 / cfg.trials as f64 };
                estimates.push(EstimateRow {
                    experiment: residual_label(k),
                    n,
                    p: Some(cfg.p.to_f64()),
                    trials: cfg.trials,
                    estimate,
                    ci_halfwidth: binomial_ci(estimate, cfg.trials, z),
                    baseline_exact: None,
                    baseline_formula: None,
                    seed: config.seed,
                    wall_ms: elapsed_ms(start, opts),
                });
            }
            if integral {
                let smallest = 2f64.powf(-thresholds.last().copied().unwrap_or(0.0));
                let in_span = count_trials(seed, cfg.trials, None, |rng| {
                    let (d, rows) = residual(rng)?;
                    if d > smallest {
                        return Ok(false);
                    }
                    let augmented: Vec<Vec<i64>> =
                        rows.iter().zip(&v).map(|(r, &vi)| r.iter().copied().chain([vi as i64]).collect()).collect();
                    Ok(exact_rank_int(&augmented) == exact_rank_int(&rows))
                })?;
                summary.insert(format!("exactly_in_span[n={n}]"), json!(in_span));
            }
        }
        Ok(())
    })??;
    Ok(CampaignReport {
        experiment: "block-residual".into(),
        params: params_of(config),
        estimates,
        baselines: Vec::new(),
        summary,
        seed: config.seed,
        detail: None,
    })
}
