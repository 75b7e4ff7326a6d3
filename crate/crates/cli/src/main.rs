//! `subsel`: variable-selection experiments from the command line.
//!
//! Three subcommands share a config file: `simulate` runs seeded campaigns
//! and writes TPR-FDR curves, `fit` tunes the configured methods on a CSV
//! and reports held-out performance, and `diagnose` computes design
//! diagnostics for a dataset, a simulated instance, or the bundled
//! adversarial fixture.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use subsel::core::Standardize;
use subsel_cli::config::load_config;
use subsel_cli::diagnose::{run_diagnose, DiagnoseOpts};
use subsel_cli::fitcmd::{run_fit, FitOpts, MethodEntry};
use subsel_cli::simulate::{run_simulate, SimulateOpts};

#[derive(Parser)]
#[command(
    name = "subsel",
    version,
    about = "Sparse variable selection: simulation campaigns, model fitting, and design diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded simulation campaign and write one TPR-FDR curve CSV per
    /// configured method.
    Simulate(SimulateCmd),
    /// Fit the configured methods to a CSV dataset and write a JSON report
    /// of out-of-sample performance and ranked features.
    Fit(FitCmd),
    /// Compute design diagnostics (separation margins, eigenvalue floor,
    /// coefficient floor, irrepresentable value, condition number).
    Diagnose(DiagnoseCmd),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum StandardizeArg {
    /// Center each column and scale to unit sample variance.
    Zscore,
    /// Center each column and scale to unit Euclidean norm.
    Unitnorm,
}

impl From<StandardizeArg> for Standardize {
    fn from(arg: StandardizeArg) -> Self {
        match arg {
            StandardizeArg::Zscore => Standardize::ZScore,
            StandardizeArg::Unitnorm => Standardize::UnitNorm,
        }
    }
}

#[derive(Args)]
struct SimulateCmd {
    /// Experiment config (TOML; JSON also accepted).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for curve CSVs and the run log.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
    /// Subset-enumeration budget for exhaustive methods.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Standardize columns before running methods (default: raw draws).
    #[arg(long, value_enum)]
    standardize: Option<StandardizeArg>,
}

#[derive(Args)]
struct FitCmd {
    /// Experiment config (TOML; JSON also accepted).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the JSON report.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// CSV path; overrides the config's `[input]` table.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Response column name; overrides the config's `[input]` table.
    #[arg(long)]
    response: Option<String>,
    /// Fraction of rows used for training.
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    /// Also report an ordinary refit on the top-k ranked features.
    #[arg(long)]
    refit_top: Option<usize>,
    /// Append this many seeded pure-noise columns before fitting.
    #[arg(long)]
    augment_noise: Option<usize>,
    /// Subset-enumeration budget for exhaustive methods.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Column standardization applied before splitting.
    #[arg(long, value_enum, default_value_t = StandardizeArg::Zscore)]
    standardize: StandardizeArg,
}

#[derive(Args)]
struct DiagnoseCmd {
    /// Experiment config providing a [sim] or [input] data source.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the bundled 3x4 adversarial fixture with this interpolation
    /// parameter (0 < eta <= 1) instead of a config data source.
    #[arg(long)]
    corner: Option<f64>,
    /// True feature indices for CSV input, comma separated (e.g. "0,3,7").
    #[arg(long)]
    truth: Option<String>,
    /// Master seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the JSON report.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Subset-enumeration budget; scans above it are sampled and flagged
    /// as estimates.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Standardize CSV columns before computing diagnostics.
    #[arg(long, value_enum)]
    standardize: Option<StandardizeArg>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(cmd) => simulate(cmd),
        Command::Fit(cmd) => fit(cmd),
        Command::Diagnose(cmd) => diagnose(cmd),
    }
}

fn simulate(cmd: SimulateCmd) -> Result<()> {
    let config = load_config(&cmd.config)?;
    let seed = cmd.seed.unwrap_or(config.seed);
    let opts = SimulateOpts {
        out_dir: cmd.out,
        threads: cmd.threads,
        budget: cmd.budget,
        standardize: cmd.standardize.map(Standardize::from),
    };
    let summary = run_simulate(&config, seed, &opts)?;
    for file in &summary.curve_files {
        println!("wrote {}", file.display());
    }
    println!("wrote {}", summary.log_file.display());
    Ok(())
}

fn fit(cmd: FitCmd) -> Result<()> {
    let config = load_config(&cmd.config)?;
    let seed = cmd.seed.unwrap_or(config.seed);
    let opts = FitOpts {
        input: cmd.input,
        response: cmd.response,
        train_fraction: cmd.split,
        refit_top: cmd.refit_top,
        augment_noise: cmd.augment_noise,
        standardize: cmd.standardize.into(),
        out_dir: cmd.out,
        budget: cmd.budget,
    };
    let (report, path) = run_fit(&config, seed, &opts)?;
    for entry in &report.methods {
        match entry {
            MethodEntry::Ok(m) => println!(
                "{}: {} features, test R^2 = {:.4}",
                m.name, m.model_size, m.test_r2
            ),
            MethodEntry::Failed { name, error } => println!("{name}: failed ({error})"),
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn diagnose(cmd: DiagnoseCmd) -> Result<()> {
    let config = match &cmd.config {
        Some(path) => Some(load_config(path)?),
        None => None,
    };
    let seed = cmd
        .seed
        .or(config.as_ref().map(|c| c.seed))
        .unwrap_or(0);
    let truth = match &cmd.truth {
        None => None,
        Some(list) => Some(
            list.split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<usize>()
                        .with_context(|| format!("bad feature index '{tok}' in --truth"))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    let opts = DiagnoseOpts {
        corner: cmd.corner,
        truth,
        standardize: cmd.standardize.map(Standardize::from),
        out_dir: cmd.out,
        budget: cmd.budget,
    };
    let (report, path) = run_diagnose(config.as_ref(), seed, &opts)?;
    if let Some(lam) = report.lambda_min_over_false_sets.ok() {
        println!(
            "eigenvalue floor over false sets: {:.6e} ({})",
            lam.value,
            if lam.exact { "exact" } else { "sampled" }
        );
    }
    if let Some(irr) = report.irrepresentable.ok() {
        println!(
            "irrepresentable value: {:.6} ({} 1)",
            irr.value,
            if irr.satisfied { "<" } else { ">=" }
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}
