use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rmlab::campaign::{default_config, run, ReportFormat, RunOptions};
use rmlab::error::{Error, Result};
use rmlab::model::Config;

#[derive(Parser, Debug)]
#[command(name = "rmlab", version, about = "Singularity and anticoncentration experiments for random 0/1 matrices")]
struct Cli {
    /// TOML configuration; its experiment kind must match the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Fill the wall_ms column. Makes the output non-reproducible.
    #[arg(long, global = true)]
    timing: bool,
    /// Also write the per-sample table, when the experiment has one, as CSV.
    #[arg(long, global = true)]
    detail_out: Option<PathBuf>,
    /// Print the effective configuration as TOML instead of running.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Verb {
    /// Monte Carlo estimate of q_n(p) against the zero-line and 2n(1-p)^n curves.
    Singularity,
    /// Singularity of matrices with rows on the central slice.
    Qn,
    /// Kernel-vector classification and threshold T*sqrt(n) of sampled matrices.
    Structure,
    /// Frequency of tiny residuals min ||Ax - v|| for n x (n-1) matrices.
    BlockResidual,
    /// Levy concentration of a weighted sum.
    Levy,
    /// Threshold function T(x, L) on a slice window.
    Threshold,
    /// Randomized rounding with clause checks.
    Round,
    /// Exact smoothing identities and the inversion experiment.
    SmoothDemo,
    /// Exhaustive singularity polynomial.
    Enumerate,
}

impl Verb {
    fn name(self) -> &'static str {
        match self {
            Verb::Singularity => "singularity",
            Verb::Qn => "qn",
            Verb::Structure => "structure",
            Verb::BlockResidual => "block-residual",
            Verb::Levy => "levy",
            Verb::Threshold => "threshold",
            Verb::Round => "round",
            Verb::SmoothDemo => "smooth-demo",
            Verb::Enumerate => "enumerate",
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let verb = cli.verb.name();
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => default_config(verb).ok_or_else(|| Error::Internal(format!("no default for {verb}")))?,
    };
    if cfg.experiment.verb() != verb {
        return Err(Error::Parameter(format!(
            "configuration describes a {} experiment, not {verb}",
            cfg.experiment.verb()
        )));
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    if cli.print_config {
        print!("{}", cfg.to_toml_string()?);
        return Ok(());
    }
    let opts = RunOptions {
        workers: cli.workers,
        timing: cli.timing,
    };
    let report = run(&cfg, &opts)?;
    let format = match cli.format {
        Format::Csv => ReportFormat::Csv,
        Format::Text => ReportFormat::Text,
    };
    report.emit(format, cli.out.as_deref())?;
    if let Some(path) = &cli.detail_out {
        match &report.detail {
            Some(detail) => std::fs::write(path, detail.to_csv()?)?,
            None => eprintln!("rmlab: {} has no per-sample table", cli.verb.name()),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rmlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
