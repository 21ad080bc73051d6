//! The configuration file.
//!
//! A single TOML document with three top-level keys:
//!
//! ```toml
//! seed = 7
//!
//! [constants]
//! c_lkr = 1.0          # constant in the Lévy–Kolmogorov–Rogozin bound
//! l_threshold = 4.0    # L in the threshold function T(x, L)
//! c_round = 5.0        # (R2)/(R4) constant of randomized rounding
//! c_round_lower = 0.1  # (R3) constant of randomized rounding
//! k_opnorm = 4.0       # K in the event ‖H − pJ‖ ≤ K√n
//!
//! [constants.tolerances]
//! rank_zero_tol = 1e-8
//! unit_norm_tol = 1e-12
//! ci_z = 3.0
//!
//! [experiment]
//! kind = "singularity"
//! points = [{ n = 3, p = "1/2", trials = 1000000 }]
//! ```
//!
//! `experiment.kind` selects one of the [`ExperimentConfig`] variants; field names are
//! the snake_case names of the corresponding structs below.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Probability, WeightModel};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rank_zero_tol: f64,
    pub unit_norm_tol: f64,
    pub ci_z: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_zero_tol: 1e-8,
            unit_norm_tol: 1e-12,
            ci_z: 3.0,
        }
    }
}

/// Absolute constants that the theory leaves unspecified. They are knobs, never derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub c_lkr: f64,
    pub l_threshold: f64,
    pub c_round: f64,
    pub c_round_lower: f64,
    pub k_opnorm: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self {
            c_lkr: 1.0,
            l_threshold: 4.0,
            c_round: 5.0,
            c_round_lower: 0.1,
            k_opnorm: 4.0,
            tolerances: Tolerances::default(),
        }
    }
}

impl ConstantsConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c_lkr", self.c_lkr),
            ("l_threshold", self.l_threshold),
            ("c_round", self.c_round),
            ("c_round_lower", self.c_round_lower),
            ("k_opnorm", self.k_opnorm),
            ("rank_zero_tol", self.tolerances.rank_zero_tol),
            ("unit_norm_tol", self.tolerances.unit_norm_tol),
            ("ci_z", self.tolerances.ci_z),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("constants.{name} = {v} must be positive")));
            }
        }
        if self.c_round_lower > 1.0 {
            return Err(Error::param("constants.c_round_lower must lie in (0,1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularityPoint {
    pub n: usize,
    pub p: Probability,
    pub trials: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularityConfig {
    pub points: Vec<SingularityPoint>,
    /// Largest n for which the exhaustive singularity polynomial is attached as a baseline.
    #[serde(default = "default_exact_bernoulli")]
    pub exact_max_n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_dir: Option<PathBuf>,
}

fn default_exact_bernoulli() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QnPoint {
    pub n: usize,
    pub trials: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QnConfig {
    pub points: Vec<QnPoint>,
    /// Largest n for which the exhaustive Q_n baseline is computed.
    #[serde(default = "default_exact_qn")]
    pub exact_max_n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_dir: Option<PathBuf>,
}

fn default_exact_qn() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConfig {
    pub ns: Vec<usize>,
    pub p: Probability,
    pub delta: f64,
    pub rho: f64,
    pub gamma: f64,
    pub samples: u64,
    /// Overrides `constants.l_threshold` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default = "default_atom_budget")]
    pub atom_budget: u64,
}

fn default_atom_budget() -> u64 {
    100_000_000
}

/// The fixed right-hand side `v` of the block residual experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ResidualTarget {
    /// The all-ones vector.
    Ones,
    /// The first standard basis vector.
    FirstBasis,
    /// An explicit vector; its length fixes n.
    Explicit { v: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockResidualConfig {
    pub ns: Vec<usize>,
    pub p: Probability,
    pub trials: u64,
    pub target: ResidualTarget,
    /// Thresholds are `2^{−e·n}` for each exponent `e`.
    #[serde(default = "default_residual_exponents")]
    pub threshold_exponents: Vec<f64>,
}

fn default_residual_exponents() -> Vec<f64> {
    vec![0.25, 0.5]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyConfig {
    pub x: Vec<f64>,
    pub r: f64,
    pub model: WeightModel,
    /// Zero selects exact enumeration.
    #[serde(default)]
    pub trials: u64,
    #[serde(default = "default_atom_budget")]
    pub atom_budget: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    pub x: Vec<f64>,
    pub p: Probability,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    /// Zero selects exact enumeration.
    #[serde(default)]
    pub trials: u64,
    #[serde(default = "default_atom_budget")]
    pub atom_budget: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundConfig {
    pub y: Vec<f64>,
    #[serde(default)]
    pub lambda: f64,
    pub mu: f64,
    pub model: WeightModel,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_one")]
    pub instances: u64,
}

fn default_max_attempts() -> u32 {
    64
}

fn default_one() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothDemoConfig {
    /// Random (f, X) instances for the recursion and product identities.
    pub instances: u64,
    pub max_ell: usize,
    /// Inversion experiment dimension, scale and sample count.
    pub n: usize,
    pub big_n: i64,
    pub samples: u64,
    pub p: Probability,
    pub gamma: f64,
    pub l: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerateConfig {
    pub n: usize,
    #[serde(default)]
    pub p_values: Vec<Probability>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Singularity(SingularityConfig),
    Qn(QnConfig),
    Structure(StructureConfig),
    BlockResidual(BlockResidualConfig),
    Levy(LevyConfig),
    Threshold(ThresholdConfig),
    Round(RoundConfig),
    SmoothDemo(SmoothDemoConfig),
    Enumerate(EnumerateConfig),
}

impl ExperimentConfig {
    /// The CLI verb that runs this experiment.
    pub fn verb(&self) -> &'static str {
        match self {
            ExperimentConfig::Singularity(_) => "singularity",
            ExperimentConfig::Qn(_) => "qn",
            ExperimentConfig::Structure(_) => "structure",
            ExperimentConfig::BlockResidual(_) => "block-residual",
            ExperimentConfig::Levy(_) => "levy",
            ExperimentConfig::Threshold(_) => "threshold",
            ExperimentConfig::Round(_) => "round",
            ExperimentConfig::SmoothDemo(_) => "smooth-demo",
            ExperimentConfig::Enumerate(_) => "enumerate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(with = "seed_format")]
    pub seed: u64,
    #[serde(default)]
    pub constants: ConstantsConfig,
    pub experiment: ExperimentConfig,
}

impl Config {
    pub fn new(seed: u64, experiment: ExperimentConfig) -> Self {
        Self {
            seed,
            constants: ConstantsConfig::default(),
            experiment,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.constants.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Hex SHA-256 of the canonical JSON form, used to key checkpoints.
    pub fn hash_hex(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Seeds are written as TOML integers when they fit in `i64`, as strings otherwise.
mod seed_format {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => u64::try_from(v).map_err(serde::de::Error::custom),
            Raw::Text(t) => t.trim().parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = r#"
seed = 7

[constants]
c_lkr = 1.0
l_threshold = 4.0
c_round = 5.0
c_round_lower = 0.1
k_opnorm = 4.0

[constants.tolerances]
rank_zero_tol = 1e-8
unit_norm_tol = 1e-12
ci_z = 3.0

[experiment]
kind = "singularity"
points = [{ n = 3, p = "1/2", trials = 1000 }, { n = 12, p = 0.35, trials = 10 }]
"#;

    #[test]
    fn parses_documented_example() {
        let cfg = Config::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.seed, 7);
        let ExperimentConfig::Singularity(s) = &cfg.experiment else {
            panic!("wrong kind");
        };
        assert_eq!(s.points[1].p, Probability::new(7, 20).unwrap());
        assert_eq!(s.exact_max_n, 4);
    }

    #[test]
    fn large_seeds_survive() {
        let mut cfg = Config::from_toml_str(SAMPLE).unwrap();
        cfg.seed = u64::MAX;
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(Config::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_constants() {
        let bad = SAMPLE.replace("c_lkr = 1.0", "c_lkr = -1.0");
        assert!(Config::from_toml_str(&bad).is_err());
        let typo = SAMPLE.replace("c_lkr", "c_lrk");
        assert!(Config::from_toml_str(&typo).is_err());
    }

    #[test]
    fn hash_changes_with_content() {
        let a = Config::from_toml_str(SAMPLE).unwrap();
        let mut b = a.clone();
        b.seed = 8;
        assert_ne!(a.hash_hex(), b.hash_hex());
        assert_eq!(a.hash_hex(), a.clone().hash_hex());
    }

    fn finite_pos() -> impl Strategy<Value = f64> {
        prop_oneof![
            1e-300f64..1e300,
            (1u32..1_000_000).prop_map(|k| k as f64 / 7.0),
        ]
    }

    fn probability() -> impl Strategy<Value = Probability> {
        (2u64..1000).prop_flat_map(|den| (1..den).prop_map(move |num| Probability::new(num, den).unwrap()))
    }

    fn weight_model() -> impl Strategy<Value = WeightModel> {
        prop_oneof![
            probability().prop_map(|p| WeightModel::IidBernoulli { p }),
            (0usize..100).prop_map(|m| WeightModel::Slice { m }),
            (probability(), 0.0f64..1.0).prop_map(|(p, gamma)| WeightModel::SliceWindow { p, gamma }),
        ]
    }

    proptest! {
        #[test]
        fn constants_round_trip(
            c_lkr in finite_pos(), l in finite_pos(), c_round in finite_pos(),
            c_low in 1e-9f64..=1.0, k in finite_pos(), z in finite_pos(), tol in finite_pos(),
        ) {
            let constants = ConstantsConfig {
                c_lkr, l_threshold: l, c_round, c_round_lower: c_low, k_opnorm: k,
                tolerances: Tolerances { rank_zero_tol: tol, unit_norm_tol: tol / 3.0, ci_z: z },
            };
            let cfg = Config {
                seed: 1,
                constants,
                experiment: ExperimentConfig::Enumerate(EnumerateConfig { n: 2, p_values: vec![] }),
            };
            let text = cfg.to_toml_string().unwrap();
            let back = Config::from_toml_str(&text).unwrap();
            // Bitwise equality of every float.
            prop_assert_eq!(back.constants.c_lkr.to_bits(), cfg.constants.c_lkr.to_bits());
            prop_assert_eq!(back, cfg);
        }

        #[test]
        fn weight_model_round_trip(model in weight_model(), r in finite_pos()) {
            let cfg = Config::new(3, ExperimentConfig::Levy(LevyConfig {
                x: vec![1.0, -0.5], r, model, trials: 0, atom_budget: 10,
            }));
            let text = cfg.to_toml_string().unwrap();
            prop_assert_eq!(Config::from_toml_str(&text).unwrap(), cfg);
        }
    }
}
