//! CSV encoding shared by every emitted file: comma delimiter, LF line
//! endings, '.' decimal separator, shortest round-trip float formatting.

use std::io;

use serde::Deserialize;

use crate::analytic::Attack;
use crate::model::ModelParams;
use crate::monte_carlo::{ValidationPoint, ValidationReport};

/// Shortest representation that parses back to the same `f64`. Very small
/// or very large magnitudes switch to exponent form.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn csv_writer<W: io::Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub const VALIDATION_HEADER: [&str; 16] = [
    "regime",
    "d",
    "mu_plus",
    "mu_minus",
    "sigma_plus",
    "sigma_minus",
    "alpha",
    "lambda",
    "epsilon",
    "analytic_plus",
    "analytic_minus",
    "mc_plus",
    "mc_minus",
    "stderr_plus",
    "stderr_minus",
    "pass",
];

/// One CSV row per report. Erroring rows leave the numeric result columns
/// empty and carry `error:<tag>` in `pass`.
pub fn write_validation_csv<W: io::Write>(reports: &[ValidationReport], w: W) -> csv::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(VALIDATION_HEADER)?;
    for r in reports {
        let p = &r.point;
        let mut rec = vec![
            p.attack.to_string(),
            p.params.d.to_string(),
            fmt_f64(p.params.mu_plus),
            fmt_f64(p.params.mu_minus),
            fmt_f64(p.params.sigma_plus),
            fmt_f64(p.params.sigma_minus),
            fmt_f64(p.params.alpha),
            fmt_f64(p.lambda),
            fmt_f64(p.epsilon),
        ];
        match &r.outcome {
            Ok(o) => {
                rec.extend(
                    [
                        o.analytic.r_plus,
                        o.analytic.r_minus,
                        o.plus.value,
                        o.minus.value,
                        o.plus.stderr,
                        o.minus.stderr,
                    ]
                    .map(fmt_f64),
                );
                rec.push((o.pass_plus && o.pass_minus).to_string());
            }
            Err(e) => {
                rec.extend(std::iter::repeat_n(String::new(), 6));
                rec.push(format!("error:{}", e.tag()));
            }
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct GridRow {
    regime: String,
    d: usize,
    mu_plus: f64,
    mu_minus: f64,
    sigma_plus: f64,
    sigma_minus: f64,
    alpha: f64,
    lambda: f64,
    epsilon: f64,
}

/// Reads grid points from CSV with at least the columns
/// `regime,d,mu_plus,mu_minus,sigma_plus,sigma_minus,alpha,lambda,epsilon`.
/// Extra columns are ignored, so a validation report can be fed back in.
/// Parameter values are not validated here; invalid points surface as
/// erroring rows during validation.
pub fn read_grid_csv<R: io::Read>(r: R) -> Result<Vec<ValidationPoint>, String> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut points = Vec::new();
    for (i, row) in rdr.deserialize::<GridRow>().enumerate() {
        let row = row.map_err(|e| format!("grid row {}: {e}", i + 1))?;
        let attack: Attack = row.regime.parse().map_err(|e| format!("grid row {}: {e}", i + 1))?;
        points.push(ValidationPoint {
            attack,
            params: ModelParams {
                mu_plus: row.mu_plus,
                mu_minus: row.mu_minus,
                sigma_plus: row.sigma_plus,
                sigma_minus: row.sigma_minus,
                alpha: row.alpha,
                d: row.d,
            },
            lambda: row.lambda,
            epsilon: row.epsilon,
        });
    }
    Ok(points)
}
