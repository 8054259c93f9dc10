use std::io;

use fairmix_core::report::{csv_writer, fmt_f64};
use fairmix_core::{
    classwise_adversarial_risk, classwise_natural_risk, MixupSpec, ModelParams, PerturbationBudget, RiskPair,
};

use crate::config::AnalyticConfig;
use crate::error::CliError;

pub const HEADER: [&str; 9] =
    ["regime", "lambda", "g", "epsilon", "threshold", "r_plus", "r_minus", "delta", "favored"];

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticRow {
    pub lambda: f64,
    pub g: f64,
    pub epsilon: f64,
    pub pair: RiskPair,
}

/// Natural rows for every λ, then adversarial rows when a budget is set.
pub fn evaluate(cfg: &AnalyticConfig) -> Result<Vec<AnalyticRow>, CliError> {
    let params =
        ModelParams::new(cfg.d, cfg.mu_plus, cfg.mu_minus, cfg.sigma_plus, cfg.sigma_minus, cfg.alpha)?;
    if cfg.lambdas.is_empty() {
        return Err(CliError::Config("`lambdas` must not be empty".into()));
    }
    let specs = cfg.lambdas.iter().map(|&l| MixupSpec::new(l)).collect::<Result<Vec<_>, _>>()?;
    let budget = cfg.epsilon.map(PerturbationBudget::new).transpose()?;
    if let Some(b) = &budget {
        b.check(&params)?;
    }

    let mut rows = Vec::new();
    for spec in &specs {
        let pair = classwise_natural_risk(&params, spec)?;
        rows.push(AnalyticRow { lambda: spec.lambda(), g: spec.g(), epsilon: 0.0, pair });
    }
    if let Some(b) = &budget {
        for spec in &specs {
            let pair = classwise_adversarial_risk(&params, spec, b)?;
            rows.push(AnalyticRow { lambda: spec.lambda(), g: spec.g(), epsilon: b.epsilon(), pair });
        }
    }
    Ok(rows)
}

pub fn write_csv<W: io::Write>(rows: &[AnalyticRow], w: W) -> csv::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(HEADER)?;
    for r in rows {
        let p = &r.pair;
        let favored = p.favored().map_or_else(|| "none".to_string(), |y| y.to_string());
        out.write_record([
            p.regime.to_string(),
            fmt_f64(r.lambda),
            fmt_f64(r.g),
            fmt_f64(r.epsilon),
            fmt_f64(p.threshold),
            fmt_f64(p.r_plus),
            fmt_f64(p.r_minus),
            fmt_f64(p.delta),
            favored,
        ])?;
    }
    out.flush()?;
    Ok(())
}
