//! The `fairmix` command line: closed-form risks, figure sweeps, formula
//! validation against Monte Carlo, and training runs.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::commands::{analytic, csv_bytes, emit, sweep, train, validate};
use crate::config::{AnalyticConfig, Axis, SweepConfig, TrainRunConfig, ValidateConfig};
use crate::error::CliError;
use crate::manifest::{with_suffix, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "fairmix", version, about = "Class-wise risk disparity under same-class mixup")]
pub struct Cli {
    /// JSON config, or a manifest from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent. A manifest is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form class-wise risks of the optimal classifier.
    Analytic(AnalyticArgs),
    /// Closed-form (and optionally Monte Carlo) risks along one parameter axis.
    Sweep(SweepArgs),
    /// Check closed-form risks against Monte Carlo on a grid.
    Validate(ValidateArgs),
    /// Train logistic classifiers over several seeds and regimes.
    Train(TrainArgs),
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub mu_plus: Option<f64>,
    #[arg(long)]
    pub mu_minus: Option<f64>,
    #[arg(long)]
    pub sigma_plus: Option<f64>,
    #[arg(long)]
    pub sigma_minus: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comma-separated mixing weights.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Start from the built-in sweep for this axis.
    #[arg(long, value_enum)]
    pub preset: Option<Axis>,
    /// Monte Carlo samples per class and row.
    #[arg(long)]
    pub mc_n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// CSV grid with columns regime,d,mu_plus,mu_minus,sigma_plus,sigma_minus,alpha,lambda,epsilon.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub multiplier: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Number of seeds.
    #[arg(long)]
    pub seeds: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

fn base_config<T: Default + serde::de::DeserializeOwned>(cli: &Cli, command: &str) -> Result<T, CliError> {
    cli.config.as_deref().map_or_else(|| Ok(T::default()), |p| config::load(p, command))
}

fn finish<C: Serialize>(
    cli: &Cli,
    command: &'static str,
    seed: Option<u64>,
    cfg: &C,
    files: Vec<(PathBuf, Vec<u8>)>,
) -> Result<(), CliError> {
    let Some(out) = cli.out.as_deref() else {
        return emit(None, &files[0].1);
    };
    for (path, bytes) in &files {
        emit(Some(path), bytes)?;
    }
    let outputs = files.into_iter().map(|(p, _)| p).collect();
    RunManifest::new(command, seed, cfg, outputs).write_next_to(out)?;
    Ok(())
}

fn out_or_default(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_default()
}

/// Runs one invocation and returns the process exit code for non-error
/// outcomes.
pub fn run(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Analytic(a) => {
            let mut cfg: AnalyticConfig = base_config(cli, "analytic")?;
            macro_rules! set {
                ($($f:ident),*) => { $(if let Some(v) = a.$f { cfg.$f = v; })* };
            }
            set!(d, mu_plus, mu_minus, sigma_plus, sigma_minus, alpha);
            if !a.lambda.is_empty() {
                cfg.lambdas = a.lambda.clone();
            }
            if a.epsilon.is_some() {
                cfg.epsilon = a.epsilon;
            }
            let rows = analytic::evaluate(&cfg)?;
            let bytes = csv_bytes(|b| analytic::write_csv(&rows, b));
            finish(cli, "analytic", None, &cfg, vec![(out_or_default(cli), bytes)])?;
            Ok(0)
        }
        Command::Sweep(a) => {
            let mut cfg = match (&cli.config, a.preset) {
                (Some(p), _) => config::load::<SweepConfig>(p, "sweep")?,
                (None, Some(axis)) => SweepConfig::preset(axis),
                (None, None) => return Err(CliError::Config("sweep needs --config or --preset".into())),
            };
            if let Some(n) = a.mc_n {
                cfg.mc_n = n;
            }
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let rows = sweep::run_sweep(&cfg)?;
            let bytes = csv_bytes(|b| sweep::write_csv(&rows, cfg.mc_n > 0, cfg.mc_multiplier, b));
            finish(cli, "sweep", Some(cfg.seed), &cfg, vec![(out_or_default(cli), bytes)])?;
            Ok(0)
        }
        Command::Validate(a) => {
            let mut cfg: ValidateConfig = base_config(cli, "validate")?;
            if a.grid.is_some() {
                cfg.grid = a.grid.clone();
            }
            if let Some(n) = a.n {
                cfg.n = n;
            }
            if let Some(m) = a.multiplier {
                cfg.multiplier = m;
            }
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let reports = validate::run_validation(&cfg)?;
            let bytes = csv_bytes(|b| fairmix_core::report::write_validation_csv(&reports, b));
            finish(cli, "validate", Some(cfg.seed), &cfg, vec![(out_or_default(cli), bytes)])?;
            let passed = reports.iter().filter(|r| r.passed()).count();
            eprintln!("{passed}/{} rows passed", reports.len());
            Ok(if passed == reports.len() { 0 } else { 1 })
        }
        Command::Train(a) => {
            let mut cfg: TrainRunConfig = base_config(cli, "train")?;
            if let Some(n) = a.seeds {
                cfg.seeds = n;
            }
            if let Some(e) = a.epochs {
                cfg.epochs = e;
            }
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let runs = train::run_training(&cfg)?;
            let agg = train::aggregate(&runs, &cfg.regimes);
            let aggregate_csv = csv_bytes(|b| train::write_aggregate_csv(&agg, b));
            let files = match cli.out.as_deref() {
                None => vec![(PathBuf::new(), aggregate_csv)],
                Some(out) => vec![
                    (out.to_path_buf(), csv_bytes(|b| train::write_runs_csv(&runs, b))),
                    (with_suffix(out, ".aggregate.csv"), aggregate_csv),
                    (with_suffix(out, ".json"), train::report_json(&cfg, &runs, &agg).into_bytes()),
                ],
            };
            finish(cli, "train", Some(cfg.seed), &cfg, files)?;
            Ok(0)
        }
    }
}

/// Convenience for callers that already hold an output path.
pub fn manifest_path(out: &Path) -> PathBuf {
    with_suffix(out, ".manifest.json")
}
