//! End-to-end acceptance checks. Runs without the libtest harness so that every check
//! prints exactly one PASS/FAIL line; the process fails if any check fails.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use rmlab::anticoncentration::{build_atoms, levy_exact, levy_mc, threshold_from_atoms};
use rmlab::campaign::{run, CampaignReport, ReportFormat, RunOptions};
use rmlab::linalg::{qn_singular_exact, singularity_polynomial, zero_line_probability};
use rmlab::model::{
    derive_stream, BlockResidualConfig, Config, ConstantsConfig, DiscreteDensity, ExperimentConfig, Probability, QnConfig,
    QnPoint, ResidualTarget, SingularityConfig, SingularityPoint, StructureConfig, WeightModel,
};
use rmlab::rounding::randomized_round;
use rmlab::sampling::LatticePoint;
use rmlab::smoothing::{
    build_step_record, eval_f_direct, eval_f_recursive, product_identity_check, StepRecord,
};

type Check = std::result::Result<String, String>;

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

fn prob(num: u64, den: u64) -> Probability {
    Probability::new(num, den).unwrap()
}

fn ensure(ok: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn run_cfg(cfg: &Config, workers: usize) -> CampaignReport {
    run(cfg, &RunOptions::with_workers(workers)).unwrap()
}

/// Rank over the rationals by plain elimination, independent of the library.
fn rational_rank(rows: &[Vec<u8>]) -> usize {
    let mut a: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect())
        .collect();
    let (nr, nc) = (a.len(), a.first().map_or(0, Vec::len));
    let mut rank = 0;
    for c in 0..nc {
        let Some(piv) = (rank..nr).find(|&r| !a[r][c].is_zero()) else { continue };
        a.swap(rank, piv);
        for r in 0..nr {
            if r != rank && !a[r][c].is_zero() {
                let f = &a[r][c] / &a[rank][c];
                for k in c..nc {
                    let d = &f * &a[rank][k];
                    a[r][k] -= d;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn within_sigmas(estimate: f64, exact: f64, trials: u64, k: f64) -> bool {
    let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
    (estimate - exact).abs() <= k * sigma
}

fn exhaustive_polynomial() -> Check {
    let p2 = singularity_polynomial(2).map_err(|e| e.to_string())?;
    let counts: Vec<String> = p2.counts.iter().map(|c| c.to_string()).collect();
    ensure(counts == ["1", "4", "4", "0", "1"], format!("n=2 counts {counts:?}"))?;
    ensure(p2.evaluate_prob(prob(1, 2)) == q(10, 16), "q_2(1/2) != 10/16")?;

    let start = Instant::now();
    let p3 = singularity_polynomial(3).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(10), format!("n=3 took {took:?}"))?;

    let singular_masks: Vec<u32> = (0u32..512)
        .filter(|mask| {
            let rows: Vec<Vec<u8>> =
                (0..3).map(|i| (0..3).map(|j| ((mask >> (3 * i + j)) & 1) as u8).collect()).collect();
            rational_rank(&rows) < 3
        })
        .collect();
    for (num, den) in [(1u64, 2u64), (1, 3), (2, 5)] {
        let p = q(num as i64, den as i64);
        let mut direct = BigRational::zero();
        for mask in &singular_masks {
            let ones = mask.count_ones();
            let mut w = BigRational::one();
            for k in 0..9 {
                w *= if k < ones { p.clone() } else { BigRational::one() - &p };
            }
            direct += w;
        }
        let poly = p3.evaluate_prob(prob(num, den));
        ensure(poly == direct, format!("q_3({num}/{den}): {poly} vs {direct}"))?;
    }
    Ok(format!("n=3 polynomial in {:.2?}; exact at 1/2, 1/3, 2/5", took))
}

fn mc_against_exact() -> Check {
    let start = Instant::now();
    let cfg = Config::new(
        1,
        ExperimentConfig::Singularity(SingularityConfig {
            points: vec![
                SingularityPoint { n: 2, p: prob(1, 2), trials: 1_000_000 },
                SingularityPoint { n: 3, p: prob(1, 2), trials: 1_000_000 },
                SingularityPoint { n: 3, p: prob(3, 10), trials: 1_000_000 },
            ],
            exact_max_n: 4,
            checkpoint_dir: None,
        }),
    );
    let report = run_cfg(&cfg, 0);
    let mut parts = Vec::new();
    for row in report.estimates.iter().filter(|r| r.experiment == "singularity") {
        let pp = row.p.unwrap();
        let exact = singularity_polynomial(row.n)
            .unwrap()
            .evaluate_prob(Probability::from_f64(pp).unwrap())
            .to_f64()
            .unwrap();
        ensure(
            within_sigmas(row.estimate, exact, row.trials, 3.0),
            format!("n={} p={pp}: {} vs {exact}", row.n, row.estimate),
        )?;
        parts.push(format!("({},{pp}) {:.5}/{exact:.5}", row.n, row.estimate));
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(120), format!("took {took:?}"))?;
    Ok(format!("{} in {took:.1?}", parts.join(", ")))
}

fn zero_line_inclusion() -> Check {
    let start = Instant::now();
    let cfg = Config::new(
        2,
        ExperimentConfig::Singularity(SingularityConfig {
            points: [12, 16, 20]
                .iter()
                .map(|&n| SingularityPoint { n, p: prob(7, 20), trials: 1_000_000 })
                .collect(),
            exact_max_n: 4,
            checkpoint_dir: None,
        }),
    );
    let report = run_cfg(&cfg, 0);
    let mut ratios = Vec::new();
    for row in report.estimates.iter().filter(|r| r.experiment == "singularity") {
        let zero = zero_line_probability(row.n, prob(7, 20)).unwrap().exact.to_f64().unwrap();
        let sigma = (row.estimate * (1.0 - row.estimate) / row.trials as f64).sqrt();
        ensure(
            row.estimate + 3.0 * sigma >= zero,
            format!("n={}: {} + 3σ < {zero}", row.n, row.estimate),
        )?;
        ratios.push((row.n, row.estimate / zero));
    }
    let r12 = ratios.iter().find(|r| r.0 == 12).unwrap().1;
    let r20 = ratios.iter().find(|r| r.0 == 20).unwrap().1;
    ensure(r20 < r12, format!("ratio at 20 ({r20:.4}) not below ratio at 12 ({r12:.4})"))?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(900), format!("took {took:?}"))?;
    let shown: Vec<String> = ratios.iter().map(|(n, r)| format!("n={n}: {r:.3}")).collect();
    Ok(format!("ratios {} in {took:.1?}", shown.join(", ")))
}

fn qn_values_and_trend() -> Check {
    ensure(qn_singular_exact(2, 1_000).unwrap() == q(1, 2), "Q_2 != 1/2")?;
    ensure(qn_singular_exact(3, 1_000).unwrap() == q(7, 9), "Q_3 != 7/9")?;
    let slice: Vec<Vec<u8>> = (0u8..16)
        .filter(|m| m.count_ones() == 2)
        .map(|m| (0..4).map(|i| (m >> i) & 1).collect())
        .collect();
    let mut singular = 0i64;
    for a in &slice {
        for b in &slice {
            for c in &slice {
                for d in &slice {
                    if rational_rank(&[a.clone(), b.clone(), c.clone(), d.clone()]) < 4 {
                        singular += 1;
                    }
                }
            }
        }
    }
    let q4 = qn_singular_exact(4, 10_000).unwrap();
    ensure(q4 == q(singular, 1296), format!("Q_4 {q4} vs {singular}/1296"))?;

    let cfg = Config::new(
        3,
        ExperimentConfig::Qn(QnConfig {
            points: vec![
                QnPoint { n: 4, trials: 1_000_000 },
                QnPoint { n: 6, trials: 200_000 },
                QnPoint { n: 8, trials: 200_000 },
                QnPoint { n: 10, trials: 200_000 },
            ],
            exact_max_n: 4,
            checkpoint_dir: None,
        }),
    );
    let report = run_cfg(&cfg, 0);
    let q4f = q4.to_f64().unwrap();
    let at4 = &report.estimates[0];
    ensure(within_sigmas(at4.estimate, q4f, at4.trials, 3.0), format!("MC Q_4 {} vs {q4f}", at4.estimate))?;
    let trend: Vec<(usize, f64)> = report.estimates.iter().map(|r| (r.n, r.estimate.ln() / r.n as f64)).collect();
    let shown: Vec<String> = trend.iter().map(|(n, v)| format!("n={n}: {v:.4}")).collect();
    ensure(
        trend.windows(2).all(|w| w[1].1 < w[0].1),
        format!("log P/n not strictly decreasing: {}", shown.join(", ")),
    )?;
    Ok(format!("Q_4 = {q4}; log P/n {}", shown.join(", ")))
}

fn levy_exactness() -> Check {
    let half = WeightModel::IidBernoulli { p: Probability::half() };
    let atoms = build_atoms(&[1.0, 1.0], &half, 1e6, true).unwrap();
    let e = levy_exact(&atoms, 0.5).unwrap();
    ensure(e.value_exact == Some(q(3, 4)), format!("L((1,1), 0.5) = {:?}", e.value_exact))?;

    let trials = 100_000;
    let mut rng = derive_stream(5, 0);
    let mut devs: Vec<(f64, String)> = Vec::new();
    for k in 0..50u64 {
        let n = rng.gen_range(2..=16);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = rng.gen_range(0.05..0.5);
        let p = prob(rng.gen_range(2..=8), 10);
        let models = [
            WeightModel::IidBernoulli { p },
            WeightModel::Slice { m: rng.gen_range(0..=n) },
            WeightModel::SliceWindow { p: Probability::half(), gamma: 0.25 },
        ];
        for (j, model) in models.iter().enumerate() {
            let exact = levy_exact(&build_atoms(&x, model, 1e8, true).unwrap(), r).unwrap().value;
            let mc = levy_mc(&x, r, model, trials, 1000 + 3 * k + j as u64, 3.0).unwrap().value;
            let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
            let dev = if sigma > 0.0 { (mc - exact).abs() / sigma } else if mc == exact { 0.0 } else { f64::INFINITY };
            devs.push((dev, format!("x #{k} (n={n}, r={r:.4}) model {j}: mc {mc} exact {exact}")));
        }
    }
    let worst = devs.iter().max_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    let over = devs.iter().filter(|d| d.0 > 3.0).count();
    let mean = devs.iter().map(|d| d.0).sum::<f64>() / devs.len() as f64;
    ensure(
        over == 0,
        format!("{over} of {} comparisons beyond 3σ (mean |dev| {mean:.2}σ); worst {:.2}σ at {}", devs.len(), worst.0, worst.1),
    )?;
    Ok(format!("3/4 exact; {} MC comparisons, mean |dev| {mean:.2}σ, worst {:.2}σ", devs.len(), worst.0))
}

fn threshold_examples() -> Check {
    let model = WeightModel::SliceWindow { p: Probability::half(), gamma: 0.5 };
    let atoms = build_atoms(&[0.6, 0.8], &model, 1e6, false).unwrap();
    let t = threshold_from_atoms(&atoms, 4.0).unwrap();
    ensure((t - 0.125).abs() <= 1e-12, format!("T = {t}"))?;
    let empty = threshold_from_atoms(&atoms, f64::INFINITY).unwrap();
    ensure(empty == 0.0, format!("empty set gave {empty}"))?;
    Ok(format!("T = {t}, empty set -> 0"))
}

fn random_density<R: Rng>(rng: &mut R) -> DiscreteDensity {
    let len = rng.gen_range(1..=5);
    let mut w: Vec<u64> = (0..len).map(|_| rng.gen_range(0..8)).collect();
    w[0] += 1;
    DiscreteDensity::exact_from_weights(rng.gen_range(-2..=2), &w).unwrap()
}

fn smoothing_identities() -> Check {
    let mut rng = derive_stream(7, 0);
    let mut compared = 0usize;
    for inst in 0..100 {
        let f = random_density(&mut rng);
        let x = LatticePoint::new((0..12).map(|_| rng.gen_range(-4..=4)).collect());
        let tables = eval_f_recursive::<BigRational>(&f, &x, 12, 12).unwrap();
        for ell in 0..=12 {
            for s in 0..=ell {
                let support = tables.function(s, ell).cloned().unwrap_or_default();
                let lo = support.keys().next().copied().unwrap_or(0) - 1;
                let hi = support.keys().next_back().copied().unwrap_or(0) + 1;
                for t in lo..=hi {
                    let direct: BigRational = eval_f_direct(&f, &x, s, ell, t).unwrap();
                    ensure(
                        direct == tables.get(s as i64, ell, t),
                        format!("instance {inst}: f_(s={s}, l={ell})({t}) differs"),
                    )?;
                    compared += 1;
                }
            }
        }
    }

    let mut records = 0;
    while records < 1000 {
        let ell = rng.gen_range(0..=12);
        let s = rng.gen_range(0..=ell);
        let f = random_density(&mut rng);
        let x = LatticePoint::new((0..ell.max(1)).map(|_| rng.gen_range(-4..=4)).collect());
        let tables = eval_f_recursive::<BigRational>(&f, &x, s, ell).unwrap();
        let support: Vec<i64> = tables.function(s, ell).unwrap().keys().copied().collect();
        let t = support[rng.gen_range(0..support.len())];
        let rec: StepRecord<BigRational> = build_step_record(&f, &x, s, ell, t).unwrap();
        let (lhs, rhs) = product_identity_check(&rec);
        ensure(lhs == rhs, format!("product identity: {lhs} vs {rhs} (s={s}, l={ell})"))?;
        ensure(rec.h_seq.windows(2).all(|w| w[0] >= w[1]), format!("h not monotone (s={s}, l={ell})"))?;
        records += 1;
    }
    Ok(format!("{compared} recursion/direct values, {records} records"))
}

fn rounding() -> Check {
    let n = 100;
    let y = vec![0.5; n];
    let model = WeightModel::IidBernoulli { p: Probability::half() };
    let constants = ConstantsConfig::default();
    let bound = 5.0 * (n as f64).sqrt();
    let (mut r1, mut r4) = (0, 0);
    let trials = 10_000u64;
    for k in 0..trials {
        let res = randomized_round(&y, 0.0, &model, 1.0, &constants, &mut derive_stream(8, k), 1).unwrap();
        if res.checks.r1 {
            r1 += 1;
        }
        let drift: f64 = y.iter().zip(&res.y_prime).map(|(a, &b)| a - b as f64).sum();
        if drift.abs() <= bound {
            r4 += 1;
        }
    }
    ensure(r1 == trials, format!("R1 held in {r1}/{trials}"))?;
    ensure(r4 as f64 >= 0.999 * trials as f64, format!("sum drift bounded in {r4}/{trials}"))?;
    Ok(format!("R1 {r1}/{trials}, drift <= 5 sqrt(n) in {r4}/{trials}"))
}

fn structure_dichotomy() -> Check {
    let cfg = Config::new(
        9,
        ExperimentConfig::Structure(StructureConfig {
            ns: vec![16, 20, 24],
            p: prob(3, 10),
            delta: 0.1,
            rho: 0.05,
            gamma: 0.05,
            samples: 200,
            l: None,
            atom_budget: 100_000_000,
        }),
    );
    let report = run_cfg(&cfg, 0);
    let mut maxima = Vec::new();
    for n in [16, 20, 24] {
        let s = &report.summary[&format!("n={n}")];
        let total: u64 = ["cons", "P", "Q", "degenerate"].iter().map(|k| s[*k].as_u64().unwrap()).sum();
        ensure(total == 200, format!("n={n}: {total} of 200 samples classified"))?;
        maxima.push((n, s["max_T_sqrt_n"].as_f64().unwrap_or(0.0)));
    }
    let hi = maxima.iter().map(|m| m.1).fold(0.0, f64::max);
    let lo = maxima.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let shown: Vec<String> = maxima.iter().map(|(n, m)| format!("n={n}: {m:.4}")).collect();
    ensure(
        lo > 0.0 && hi <= 2.0 * lo,
        format!("all classified, but max T*sqrt(n) varies by {:.2}x: {}", hi / lo, shown.join(", ")),
    )?;
    Ok(format!("all classified; max T*sqrt(n) {}", shown.join(", ")))
}

fn determinism() -> Check {
    let configs = [
        Config::new(
            10,
            ExperimentConfig::Singularity(SingularityConfig {
                points: vec![
                    SingularityPoint { n: 3, p: prob(1, 2), trials: 50_000 },
                    SingularityPoint { n: 10, p: prob(3, 10), trials: 20_000 },
                ],
                exact_max_n: 4,
                checkpoint_dir: None,
            }),
        ),
        Config::new(
            11,
            ExperimentConfig::Qn(QnConfig {
                points: vec![QnPoint { n: 6, trials: 20_000 }],
                exact_max_n: 4,
                checkpoint_dir: None,
            }),
        ),
        Config::new(
            12,
            ExperimentConfig::BlockResidual(BlockResidualConfig {
                ns: vec![10],
                p: prob(3, 10),
                trials: 5_000,
                target: ResidualTarget::Ones,
                threshold_exponents: vec![0.25, 0.5],
            }),
        ),
        Config::new(
            13,
            ExperimentConfig::Structure(StructureConfig {
                ns: vec![12],
                p: prob(3, 10),
                delta: 0.1,
                rho: 0.05,
                gamma: 0.05,
                samples: 30,
                l: None,
                atom_budget: 100_000_000,
            }),
        ),
    ];
    for cfg in &configs {
        let one = run_cfg(cfg, 1).render(ReportFormat::Csv).unwrap();
        let eight = run_cfg(cfg, 8).render(ReportFormat::Csv).unwrap();
        ensure(one == eight, format!("{} differs between 1 and 8 workers", cfg.experiment.verb()))?;
        let again = run_cfg(cfg, 8).render(ReportFormat::Csv).unwrap();
        ensure(one == again, format!("{} differs between reruns", cfg.experiment.verb()))?;
    }
    Ok(format!("{} campaigns byte-identical", configs.len()))
}

fn main() {
    let checks: [(&str, fn() -> Check); 10] = [
        ("exhaustive singularity polynomial", exhaustive_polynomial),
        ("Monte Carlo against exact q_n", mc_against_exact),
        ("zero-line lower bound and ratio trend", zero_line_inclusion),
        ("Q_n exact values, MC and log-rate trend", qn_values_and_trend),
        ("Levy concentration exact and MC", levy_exactness),
        ("threshold function", threshold_examples),
        ("smoothing identities", smoothing_identities),
        ("randomized rounding", rounding),
        ("structure dichotomy", structure_dichotomy),
        ("determinism across worker counts", determinism),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let id = i + 1;
        if let Some(f) = &filter {
            if *f != id.to_string() && !name.contains(f.as_str()) {
                continue;
            }
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("[{id:2}] PASS {name}: {detail} ({:.1?})", start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("[{id:2}] FAIL {name}: {detail} ({:.1?})", start.elapsed());
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
