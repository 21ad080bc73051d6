//! Built-in configurations used when the CLI is run without `--config`.

use crate::model::{
    BlockResidualConfig, Config, EnumerateConfig, ExperimentConfig, LevyConfig, Probability, QnConfig, QnPoint,
    ResidualTarget, RoundConfig, SingularityConfig, SingularityPoint, SmoothDemoConfig, StructureConfig,
    ThresholdConfig, WeightModel,
};

pub const DEFAULT_SEED: u64 = 20_240_101;

fn prob(num: u64, den: u64) -> Probability {
    Probability::new(num, den).expect("valid literal probability")
}

/// The default configuration for a CLI verb, or `None` for an unknown verb.
pub fn default_config(verb: &str) -> Option<Config> {
    let experiment = match verb {
        "singularity" => ExperimentConfig::Singularity(SingularityConfig {
            points: vec![
                SingularityPoint { n: 3, p: prob(1, 2), trials: 100_000 },
                SingularityPoint { n: 12, p: prob(7, 20), trials: 100_000 },
            ],
            exact_max_n: 4,
            checkpoint_dir: None,
        }),
        "qn" => ExperimentConfig::Qn(QnConfig {
            points: [4, 6, 8].iter().map(|&n| QnPoint { n, trials: 100_000 }).collect(),
            exact_max_n: 4,
            checkpoint_dir: None,
        }),
        "structure" => ExperimentConfig::Structure(StructureConfig {
            ns: vec![12, 16],
            p: prob(3, 10),
            delta: 0.1,
            rho: 0.05,
            gamma: 0.05,
            samples: 50,
            l: None,
            atom_budget: 100_000_000,
        }),
        "block-residual" => ExperimentConfig::BlockResidual(BlockResidualConfig {
            ns: vec![8, 12, 20],
            p: prob(3, 10),
            trials: 10_000,
            target: ResidualTarget::Ones,
            threshold_exponents: vec![0.25, 0.5],
        }),
        "levy" => ExperimentConfig::Levy(LevyConfig {
            x: vec![1.0, 1.0],
            r: 0.5,
            model: WeightModel::IidBernoulli { p: prob(1, 2) },
            trials: 0,
            atom_budget: 100_000_000,
        }),
        "threshold" => ExperimentConfig::Threshold(ThresholdConfig {
            x: vec![0.6, 0.8],
            p: prob(1, 2),
            gamma: 0.5,
            l: Some(4.0),
            trials: 0,
            atom_budget: 100_000_000,
        }),
        "round" => ExperimentConfig::Round(RoundConfig {
            y: vec![0.5; 100],
            lambda: 0.0,
            mu: 1.0,
            model: WeightModel::IidBernoulli { p: prob(1, 2) },
            max_attempts: 64,
            instances: 1000,
        }),
        "smooth-demo" => ExperimentConfig::SmoothDemo(SmoothDemoConfig {
            instances: 100,
            max_ell: 8,
            n: 12,
            big_n: 8,
            samples: 200,
            p: prob(1, 2),
            gamma: 0.25,
            l: 1.0,
        }),
        "enumerate" => ExperimentConfig::Enumerate(EnumerateConfig {
            n: 3,
            p_values: vec![prob(1, 2), prob(1, 3), prob(2, 5)],
        }),
        _ => return None,
    };
    Some(Config::new(DEFAULT_SEED, experiment))
}
