use std::io;

use fairmix_core::report::{csv_writer, fmt_f64};
use fairmix_core::{sample_labeled, train, ModelParams, RiskPair, TrainConfig, TrainRegime, TrainReport};
use serde::Serialize;

use crate::config::TrainRunConfig;
use crate::error::CliError;

pub fn regime_name(r: TrainRegime) -> &'static str {
    match r {
        TrainRegime::Natural => "natural",
        TrainRegime::Adversarial => "adversarial",
        TrainRegime::MixupAdversarial => "mixup_adversarial",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub regime: TrainRegime,
    pub seed: u64,
    pub report: TrainReport,
}

/// Every configured regime on every seed. Regimes sharing a seed train on
/// the same dataset.
pub fn run_training(cfg: &TrainRunConfig) -> Result<Vec<TrainRun>, CliError> {
    let params =
        ModelParams::new(cfg.d, cfg.mu_plus, cfg.mu_minus, cfg.sigma_plus, cfg.sigma_minus, cfg.alpha)?;
    if cfg.seeds == 0 {
        return Err(CliError::Config("`seeds` must be at least 1".into()));
    }
    if cfg.regimes.is_empty() {
        return Err(CliError::Config("`regimes` must not be empty".into()));
    }
    let base = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        lr_decay_factor: cfg.lr_decay_factor,
        lr_decay_every: cfg.lr_decay_every,
        seed: cfg.seed,
        regime: TrainRegime::Natural,
        epsilon: cfg.epsilon,
        lambda: cfg.lambda,
        optimizer: cfg.optimizer,
    };
    base.validate()?;

    let mut runs = Vec::new();
    for seed in cfg.seed..cfg.seed + cfg.seeds {
        let data = sample_labeled(&params, cfg.n, seed)?;
        for &regime in &cfg.regimes {
            let report = train(&data, &TrainConfig { seed, regime, ..base.clone() })?;
            log::info!(
                "{} seed {seed}: adversarial delta {:.4}",
                regime_name(regime),
                report.adversarial.delta
            );
            runs.push(TrainRun { regime, seed, report });
        }
    }
    Ok(runs)
}

pub const RUNS_HEADER: [&str; 11] = [
    "regime",
    "seed",
    "natural_plus",
    "natural_minus",
    "natural_delta",
    "adversarial_plus",
    "adversarial_minus",
    "adversarial_delta",
    "threshold",
    "final_loss",
    "short_class_batches",
];

pub fn write_runs_csv<W: io::Write>(runs: &[TrainRun], w: W) -> csv::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(RUNS_HEADER)?;
    for run in runs {
        let r = &run.report;
        let mut rec = vec![regime_name(run.regime).to_string(), run.seed.to_string()];
        rec.extend(
            [
                r.natural.r_plus,
                r.natural.r_minus,
                r.natural.delta,
                r.adversarial.r_plus,
                r.adversarial.r_minus,
                r.adversarial.delta,
                r.threshold,
                *r.epoch_loss.last().expect("at least one epoch"),
            ]
            .map(fmt_f64),
        );
        rec.push(r.short_class_batches.to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub avg: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    /// Mean, sample standard deviation (0 for a single value), min and max.
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len() as f64;
        let avg = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Summary { avg, std, min, max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub regime: &'static str,
    /// `natural` or `adversarial` held-out risk.
    pub mode: &'static str,
    /// `r_plus`, `r_minus`, `delta` or `worst`.
    pub quantity: &'static str,
    #[serde(flatten)]
    pub summary: Summary,
}

type Quantity = (&'static str, fn(&RiskPair) -> f64);
type Mode = (&'static str, fn(&TrainReport) -> &RiskPair);

pub fn aggregate(runs: &[TrainRun], regimes: &[TrainRegime]) -> Vec<AggregateRow> {
    let quantities: [Quantity; 4] = [
        ("r_plus", |p| p.r_plus),
        ("r_minus", |p| p.r_minus),
        ("delta", |p| p.delta),
        ("worst", |p| p.worst()),
    ];
    let modes: [Mode; 2] = [("natural", |r| &r.natural), ("adversarial", |r| &r.adversarial)];
    let mut rows = Vec::new();
    for &regime in regimes {
        let reports: Vec<&TrainReport> =
            runs.iter().filter(|r| r.regime == regime).map(|r| &r.report).collect();
        if reports.is_empty() {
            continue;
        }
        for (mode, pick) in modes {
            for (quantity, get) in quantities {
                let values: Vec<f64> = reports.iter().map(|r| get(pick(r))).collect();
                rows.push(AggregateRow {
                    regime: regime_name(regime),
                    mode,
                    quantity,
                    summary: Summary::of(&values),
                });
            }
        }
    }
    rows
}

pub fn write_aggregate_csv<W: io::Write>(rows: &[AggregateRow], w: W) -> csv::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["regime", "mode", "quantity", "avg", "std", "min", "max"])?;
    for r in rows {
        let s = r.summary;
        let mut rec = vec![r.regime.to_string(), r.mode.to_string(), r.quantity.to_string()];
        rec.extend([s.avg, s.std, s.min, s.max].map(fmt_f64));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct RunJson<'a> {
    regime: &'static str,
    seed: u64,
    weights: &'a [f64],
    bias: f64,
    threshold: f64,
    natural: PairJson,
    adversarial: PairJson,
    epoch_loss: &'a [f64],
    short_class_batches: usize,
}

#[derive(Debug, Serialize)]
struct PairJson {
    r_plus: f64,
    r_minus: f64,
    delta: f64,
}

impl From<&RiskPair> for PairJson {
    fn from(p: &RiskPair) -> Self {
        PairJson { r_plus: p.r_plus, r_minus: p.r_minus, delta: p.delta }
    }
}

/// Full report: per-run classifiers and loss curves plus the aggregate.
pub fn report_json(cfg: &TrainRunConfig, runs: &[TrainRun], agg: &[AggregateRow]) -> String {
    let runs: Vec<RunJson> = runs
        .iter()
        .map(|run| RunJson {
            regime: regime_name(run.regime),
            seed: run.seed,
            weights: &run.report.classifier.w,
            bias: run.report.classifier.b,
            threshold: run.report.threshold,
            natural: (&run.report.natural).into(),
            adversarial: (&run.report.adversarial).into(),
            epoch_loss: &run.report.epoch_loss,
            short_class_batches: run.report.short_class_batches,
        })
        .collect();
    let doc = serde_json::json!({ "config": cfg, "runs": runs, "aggregate": agg });
    serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
}
