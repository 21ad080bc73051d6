use rmlab::campaign::{
    estimates_from_csv, residual_label, run, CampaignReport, ReportFormat, RunOptions,
};
use rmlab::model::{
    BlockResidualConfig, Config, ExperimentConfig, Probability, QnConfig, QnPoint, ResidualTarget, SingularityConfig,
    SingularityPoint, SmoothDemoConfig,
};

fn prob(a: u64, b: u64) -> Probability {
    Probability::new(a, b).unwrap()
}

fn singularity(points: Vec<SingularityPoint>) -> Config {
    Config::new(
        17,
        ExperimentConfig::Singularity(SingularityConfig { points, exact_max_n: 4, checkpoint_dir: None }),
    )
}

fn go(cfg: &Config) -> CampaignReport {
    run(cfg, &RunOptions::default()).unwrap()
}

fn covers(estimate: f64, exact: f64, trials: u64) -> bool {
    (estimate - exact).abs() <= 3.0 * (exact * (1.0 - exact) / trials as f64).sqrt()
}

#[test]
fn small_singularity_points() {
    let r = go(&singularity(vec![
        SingularityPoint { n: 1, p: prob(3, 10), trials: 100_000 },
        SingularityPoint { n: 2, p: prob(1, 2), trials: 100_000 },
    ]));
    let main: Vec<_> = r.estimates.iter().filter(|e| e.experiment == "singularity").collect();
    assert!(covers(main[0].estimate, 0.7, 100_000));
    assert!(covers(main[1].estimate, 0.625, 100_000));
    assert_eq!(main[1].baseline_exact, Some(0.625));
    assert_eq!(main[1].baseline_formula, Some(4.0 * 0.25));
    // Every main row is followed by its zero-line companion.
    let zero: Vec<_> = r.estimates.iter().filter(|e| e.experiment == "zero-line").collect();
    assert_eq!(zero.len(), 2);
    assert!((zero[0].estimate - 0.7).abs() < 1e-15);
    assert!(r.baselines.iter().any(|b| b.name == "exhaustive" && b.exact.as_deref() == Some("5/8")));
}

#[test]
fn estimate_dominates_zero_line() {
    let r = go(&singularity(vec![SingularityPoint { n: 8, p: prob(1, 4), trials: 50_000 }]));
    let (est, zero) = (&r.estimates[0], &r.estimates[1]);
    assert!(est.estimate + est.ci_halfwidth >= zero.estimate);
    assert_eq!(est.baseline_exact, None);
}

#[test]
fn trial_budget_is_refused() {
    let cfg = singularity(vec![SingularityPoint { n: 4, p: prob(1, 2), trials: 20_000_000 }]);
    let err = run(&cfg, &RunOptions::default()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let cfg = singularity(vec![SingularityPoint { n: 65, p: prob(1, 2), trials: 10 }]);
    assert_eq!(run(&cfg, &RunOptions::default()).unwrap_err().exit_code(), 2);
}

#[test]
fn checkpointed_run_matches_plain_run() {
    let dir = tempfile::tempdir().unwrap();
    let plain = singularity(vec![SingularityPoint { n: 3, p: prob(1, 2), trials: 30_000 }]);
    let mut with_cp = plain.clone();
    if let ExperimentConfig::Singularity(s) = &mut with_cp.experiment {
        s.checkpoint_dir = Some(dir.path().to_path_buf());
    }
    let a = go(&plain).render(ReportFormat::Csv).unwrap();
    let b = go(&with_cp).render(ReportFormat::Csv).unwrap();
    let c = go(&with_cp).render(ReportFormat::Csv).unwrap();
    assert_eq!(a, b);
    assert_eq!(b, c);
    assert!(std::fs::read_dir(dir.path()).unwrap().count() >= 1);
}

#[test]
fn qn_exact_baselines_are_covered() {
    let cfg = Config::new(
        3,
        ExperimentConfig::Qn(QnConfig {
            points: vec![QnPoint { n: 2, trials: 50_000 }, QnPoint { n: 3, trials: 50_000 }],
            exact_max_n: 5,
            checkpoint_dir: None,
        }),
    );
    let r = go(&cfg);
    assert_eq!(r.estimates[0].baseline_exact, Some(0.5));
    assert!(covers(r.estimates[0].estimate, 0.5, 50_000));
    assert!(covers(r.estimates[1].estimate, 7.0 / 9.0, 50_000));
}

fn residual(ns: Vec<usize>, target: ResidualTarget, trials: u64) -> CampaignReport {
    go(&Config::new(
        5,
        ExperimentConfig::BlockResidual(BlockResidualConfig {
            ns,
            p: prob(3, 10),
            trials,
            target,
            threshold_exponents: vec![0.25, 0.5],
        }),
    ))
}

#[test]
fn residual_frequencies_are_nested_and_small() {
    let r = residual(vec![20], ResidualTarget::Ones, 10_000);
    let by_label = |k: f64| r.estimates.iter().find(|e| e.experiment == residual_label(k)).unwrap().estimate;
    let (coarse, fine) = (by_label(5.0), by_label(10.0));
    assert!(fine <= coarse);
    assert!(fine < 0.05, "frequency {fine}");
}

#[test]
fn residual_in_two_dimensions() {
    // A is a single column a ∈ {0,1}²; the residual of e₁ is 1 when a = 0, |a₂|/|a| otherwise.
    let r = residual(vec![2], ResidualTarget::FirstBasis, 20_000);
    // ‖Ax − e₁‖ ≤ 2^{-1/2} fails only for a = (0,1) and a = 0, so the frequency is 1 − 0.7·0.3 − 0.49.
    let coarse = r.estimates.iter().find(|e| e.experiment == residual_label(0.5)).unwrap();
    assert!(covers(coarse.estimate, 1.0 - 0.21 - 0.49, 20_000), "{}", coarse.estimate);
}

#[test]
fn smooth_demo_identities_hold() {
    let cfg = Config::new(
        8,
        ExperimentConfig::SmoothDemo(SmoothDemoConfig {
            instances: 40,
            max_ell: 7,
            n: 8,
            big_n: 4,
            samples: 40,
            p: prob(1, 2),
            gamma: 0.25,
            l: 1.0,
        }),
    );
    let r = go(&cfg);
    for e in &r.estimates[..3] {
        assert_eq!(e.estimate, 1.0, "{}", e.experiment);
    }
    let detail = r.detail.unwrap();
    assert_eq!(detail.rows.len(), 40);
}

#[test]
fn csv_and_text_round_trip() {
    let r = go(&singularity(vec![SingularityPoint { n: 3, p: prob(1, 3), trials: 5_000 }]));
    let rows = estimates_from_csv(&r.render(ReportFormat::Csv).unwrap()).unwrap();
    assert_eq!(rows, r.estimates);
    let back = CampaignReport::from_text(&r.render(ReportFormat::Text).unwrap()).unwrap();
    assert_eq!(back, r);
}
