//! Reproducible campaigns and their reports.
//!
//! Trial `k` of grid point `i` always draws from `derive_stream(sub_seed(seed, i), k)`,
//! and counts are integer sums, so a report depends only on the configuration and never
//! on the number of workers.

pub mod counting;
pub mod defaults;
pub mod report;
pub mod runner;
pub mod structure;
pub mod tools;

pub use counting::{residual_label, run_block_residual_experiment, run_qn_campaign, run_singularity_campaign};
pub use defaults::{default_config, DEFAULT_SEED};
pub use report::{
    estimates_from_csv, estimates_to_csv, Baseline, CampaignReport, DetailTable, EstimateRow, ReportFormat,
    CSV_COLUMNS, CSV_SCHEMA_VERSION,
};
pub use runner::{binomial_ci, count_trials, Checkpoint, RunOptions, CHECKPOINT_INTERVAL};
pub use structure::{classify_kernel, run_structure_experiment, KernelClass, StructureSample};
pub use tools::{check_identities, random_instance, run_enumerate, run_levy, run_round, run_smooth_demo, run_threshold, IdentityCheck};

use crate::error::Result;
use crate::model::{Config, ExperimentConfig};

/// Runs whichever experiment `config` describes.
pub fn run(config: &Config, opts: &RunOptions) -> Result<CampaignReport> {
    config.constants.validate()?;
    match &config.experiment {
        ExperimentConfig::Singularity(_) => run_singularity_campaign(config, opts),
        ExperimentConfig::Qn(_) => run_qn_campaign(config, opts),
        ExperimentConfig::Structure(_) => run_structure_experiment(config, opts),
        ExperimentConfig::BlockResidual(_) => run_block_residual_experiment(config, opts),
        ExperimentConfig::Levy(_) => run_levy(config, opts),
        ExperimentConfig::Threshold(_) => run_threshold(config, opts),
        ExperimentConfig::Round(_) => run_round(config, opts),
        ExperimentConfig::SmoothDemo(_) => run_smooth_demo(config, opts),
        ExperimentConfig::Enumerate(_) => run_enumerate(config, opts),
    }
}
