use std::io;

use fairmix_core::monte_carlo::MIN_SAMPLES;
use fairmix_core::report::{csv_writer, fmt_f64};
use fairmix_core::rng::{child_seed, Purpose};
use fairmix_core::{
    classwise_risk, estimate_classwise_risk, Attack, Error, LinearClassifier, Mixing, MixupSpec, ModelParams,
    PerturbationBudget, Regime, RiskEstimate, RiskPair,
};

use crate::config::{Axis, SweepConfig};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub pair: RiskPair,
    pub mc: Option<(RiskEstimate, RiskEstimate)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    pub regime: Regime,
    pub result: Result<SweepResult, Error>,
}

impl SweepRow {
    /// `ok`, `mc_disagree` when a Monte Carlo estimate falls outside the
    /// tolerance, or `error:<tag>`.
    pub fn status(&self, multiplier: f64) -> String {
        match &self.result {
            Ok(SweepResult { pair, mc: Some((plus, minus)) })
                if !(plus.within(pair.r_plus, multiplier) && minus.within(pair.r_minus, multiplier)) =>
            {
                "mc_disagree".into()
            }
            Ok(_) => "ok".into(),
            Err(e) => format!("error:{}", e.tag()),
        }
    }
}

fn check(cfg: &SweepConfig) -> Result<(), CliError> {
    if cfg.grid.is_empty() {
        return Err(CliError::Config("`grid` must not be empty".into()));
    }
    if let Some(v) = cfg.grid.iter().find(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("`grid` contains non-finite value {v}")));
    }
    if cfg.regimes.is_empty() {
        return Err(CliError::Config("`regimes` must not be empty".into()));
    }
    if cfg.mc_n != 0 && cfg.mc_n < MIN_SAMPLES {
        return Err(CliError::Config(format!("`mc_n` must be 0 or at least {MIN_SAMPLES}")));
    }
    if !(cfg.mc_multiplier.is_finite() && cfg.mc_multiplier > 0.0) {
        return Err(CliError::Config("`mc_multiplier` must be positive".into()));
    }
    Ok(())
}

fn substitute(
    cfg: &SweepConfig,
    value: f64,
    regime: Regime,
) -> Result<(ModelParams, MixupSpec, PerturbationBudget), Error> {
    let mut p = ModelParams {
        mu_plus: cfg.mu_plus,
        mu_minus: cfg.mu_minus,
        sigma_plus: cfg.sigma_plus,
        sigma_minus: cfg.sigma_minus,
        alpha: cfg.alpha,
        d: cfg.d,
    };
    let (mut lambda, mut epsilon) = (cfg.lambda, cfg.epsilon);
    match cfg.axis {
        Axis::ClassDistance => {
            p.mu_plus = value;
            p.mu_minus = value;
        }
        Axis::Epsilon => epsilon = value,
        Axis::Dimension => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(Error::InvalidParam {
                    name: "d",
                    reason: format!("{value} is not a positive integer"),
                });
            }
            p.d = value as usize;
        }
        Axis::Lambda => lambda = value,
    }
    p.validate()?;
    let spec = match regime.mixing {
        Mixing::Plain => MixupSpec::plain(),
        Mixing::Mixup => MixupSpec::new(lambda)?,
    };
    let budget = match regime.attack {
        Attack::Natural => PerturbationBudget::zero(),
        Attack::Adversarial => PerturbationBudget::new(epsilon)?,
    };
    Ok((p, spec, budget))
}

/// One row per grid value and regime, ordered by value then regime. Invalid
/// points become erroring rows rather than aborting the sweep.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>, CliError> {
    check(cfg)?;
    let mut values = cfg.grid.clone();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let regimes: Vec<Regime> = Regime::ALL.into_iter().filter(|r| cfg.regimes.contains(r)).collect();

    let mut rows = Vec::with_capacity(values.len() * regimes.len());
    for &value in &values {
        for &regime in &regimes {
            let index = rows.len() as u64;
            let result = substitute(cfg, value, regime).and_then(|(p, spec, budget)| {
                let pair = classwise_risk(regime.attack, &p, &spec, &budget)?;
                let mc = if cfg.mc_n > 0 {
                    let clf = LinearClassifier::from_threshold(pair.threshold, p.d);
                    let attack = (regime.attack == Attack::Adversarial).then_some(&budget);
                    let seed = child_seed(cfg.seed, Purpose::GridPoint, index);
                    Some(estimate_classwise_risk(&p, &spec, &clf, attack, cfg.mc_n, seed, true)?)
                } else {
                    None
                };
                Ok(SweepResult { pair, mc })
            });
            if let Err(e) = &result {
                log::warn!("{} = {value}, {regime}: {e}", cfg.axis);
            }
            rows.push(SweepRow { axis: cfg.axis, value, regime, result });
        }
    }
    Ok(rows)
}

pub fn header(with_mc: bool) -> Vec<&'static str> {
    let mut h = vec!["axis", "value", "regime", "r_plus", "r_minus", "delta"];
    if with_mc {
        h.extend(["mc_plus", "mc_minus", "stderr_plus", "stderr_minus"]);
    }
    h.push("status");
    h
}

pub fn write_csv<W: io::Write>(rows: &[SweepRow], with_mc: bool, multiplier: f64, w: W) -> csv::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(header(with_mc))?;
    for r in rows {
        let mut rec = vec![r.axis.to_string(), fmt_f64(r.value), r.regime.to_string()];
        let width = if with_mc { 7 } else { 3 };
        match &r.result {
            Ok(res) => {
                rec.extend([res.pair.r_plus, res.pair.r_minus, res.pair.delta].map(fmt_f64));
                if with_mc {
                    let (plus, minus) = res.mc.expect("Monte Carlo columns requested");
                    rec.extend([plus.value, minus.value, plus.stderr, minus.stderr].map(fmt_f64));
                }
            }
            Err(_) => rec.extend(std::iter::repeat_n(String::new(), width)),
        }
        rec.push(r.status(multiplier));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
