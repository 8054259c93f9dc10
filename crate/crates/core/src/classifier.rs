//! Linear classifiers `sign(<w, x> + b)`, the exact worst-case ℓ∞ adversary
//! for them, and empirical class-wise risk on datasets.

use rayon::prelude::*;

use crate::analytic::{Attack, Mixing, PerturbationBudget, Regime, RiskPair};
use crate::error::{Error, Result};
use crate::minimize::{golden_section, grid_argmin};
use crate::model::{Dataset, Label, MixupSpec, ModelParams};
use crate::normal::{pdf, phi};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    pub w: Vec<f64>,
    pub b: f64,
}

/// `sign(v)` with `sign(0) = +1`.
#[inline]
fn sign_pos(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

impl LinearClassifier {
    pub fn new(w: Vec<f64>, b: f64) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::param("w", "weight vector is empty"));
        }
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("w, b", "weights and bias must be finite"));
        }
        Ok(LinearClassifier { w, b })
    }

    /// Uniform unit weights with bias `t`: predicts `+1` iff `Σx_i + t >= 0`.
    pub fn from_threshold(t: f64, d: usize) -> Self {
        LinearClassifier { w: vec![1.0; d], b: t }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// `b / w` when all weights are equal and nonzero.
    pub fn threshold(&self) -> Option<f64> {
        let w0 = self.w[0];
        (w0 != 0.0 && self.w.iter().all(|&v| v == w0)).then(|| self.b / w0)
    }

    /// `b / mean(w)`; the scalar reduction used for trained weights.
    pub fn mean_threshold(&self) -> f64 {
        let mean = self.w.iter().sum::<f64>() / self.dim() as f64;
        self.b / mean
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn margin_unchecked(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.b
    }

    /// `<w, x> + b`.
    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.margin_unchecked(x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok(Label::from_sign(self.margin(x)?))
    }

    /// Writes `x - y ε sign(w)` into `out`.
    #[inline]
    pub(crate) fn perturb_into(&self, x: &[f64], y: Label, epsilon: f64, out: &mut [f64]) {
        let step = y.sign() * epsilon;
        for ((o, &xi), &wi) in out.iter_mut().zip(x).zip(&self.w) {
            *o = xi - step * sign_pos(wi);
        }
    }
}

/// The point of the ℓ∞ ball around `x` that minimises the signed margin
/// `y(<w, x'> + b)`: `x' = x - y ε sign(w)`. The margin drops by `ε Σ|w_i|`.
pub fn worst_case_perturbation(
    clf: &LinearClassifier,
    x: &[f64],
    y: Label,
    budget: &PerturbationBudget,
) -> Result<Vec<f64>> {
    clf.check_dim(x)?;
    let mut out = vec![0.0; x.len()];
    clf.perturb_into(x, y, budget.epsilon(), &mut out);
    Ok(out)
}

/// Per-class error rates of `clf` on `data`, optionally under the worst-case
/// perturbation. Counting is exact, so the result does not depend on how the
/// work is split.
pub fn empirical_classwise_risk(
    clf: &LinearClassifier,
    data: &Dataset,
    budget: Option<&PerturbationBudget>,
) -> Result<RiskPair> {
    if let Some(s) = data.samples.iter().find(|s| s.x.len() != clf.dim()) {
        return Err(Error::DimensionMismatch { expected: clf.dim(), got: s.x.len() });
    }
    let epsilon = budget.map_or(0.0, |b| b.epsilon());
    let counts = data
        .samples
        .par_chunks(4096)
        .map(|chunk| {
            let mut buf = vec![0.0; clf.dim()];
            let mut c = [[0u64; 2]; 2];
            for s in chunk {
                let slot = (s.y == Label::Neg) as usize;
                let m = if budget.is_some() {
                    clf.perturb_into(&s.x, s.y, epsilon, &mut buf);
                    clf.margin_unchecked(&buf)
                } else {
                    clf.margin_unchecked(&s.x)
                };
                c[slot][0] += 1;
                c[slot][1] += (Label::from_sign(m) != s.y) as u64;
            }
            c
        })
        .reduce(
            || [[0u64; 2]; 2],
            |a, b| [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]],
        );
    for (slot, y) in Label::BOTH.iter().enumerate() {
        if counts[slot][0] == 0 {
            return Err(Error::MissingClass(*y));
        }
    }
    let rate = |slot: usize| counts[slot][1] as f64 / counts[slot][0] as f64;
    let attack = if budget.is_some() { Attack::Adversarial } else { Attack::Natural };
    Ok(RiskPair::new(
        rate(0),
        rate(1),
        clf.threshold().unwrap_or_else(|| clf.mean_threshold()),
        Regime::new(attack, Mixing::Plain),
    ))
}

/// Numerically minimises the overall (adversarial) risk of the uniform-weight
/// classifier over its threshold: a 1024-point grid spanning
/// `±4 d max(μ, σ) sqrt(d)`, then golden-section refinement to width 1e-10.
///
/// The objective is evaluated directly from the class-conditional sums and is
/// independent of the closed-form solvers in [`crate::analytic`].
pub fn fit_threshold_numeric(
    params: &ModelParams,
    spec: &MixupSpec,
    budget: Option<&PerturbationBudget>,
) -> Result<f64> {
    params.validate()?;
    let epsilon = match budget {
        Some(b) => {
            b.check(params)?;
            b.epsilon()
        }
        None => 0.0,
    };
    let d = params.d as f64;
    let spread = (d * spec.g()).sqrt();
    let mean_plus = d * (params.mu_plus - epsilon);
    let mean_minus = d * (params.mu_minus - epsilon);
    let sd_plus = spread * params.sigma_plus;
    let sd_minus = spread * params.sigma_minus;
    let alpha = params.alpha;
    let risk =
        |t: f64| alpha * phi((-t - mean_plus) / sd_plus) + (1.0 - alpha) * phi((t - mean_minus) / sd_minus);
    let slope = |t: f64| {
        -alpha * pdf((-t - mean_plus) / sd_plus) / sd_plus
            + (1.0 - alpha) * pdf((t - mean_minus) / sd_minus) / sd_minus
    };

    let scale =
        params.mu_plus.abs().max(params.mu_minus.abs()).max(params.sigma_plus).max(params.sigma_minus);
    let half_width = 4.0 * d * scale * d.sqrt();
    const POINTS: usize = 1024;
    let (i, _) = grid_argmin(risk, -half_width, half_width, POINTS);
    let step = 2.0 * half_width / (POINTS - 1) as f64;
    let lo = -half_width + step * i.saturating_sub(1) as f64;
    let hi = -half_width + step * (i + 1).min(POINTS - 1) as f64;
    if !(slope(lo) <= 0.0 && slope(hi) >= 0.0) {
        return Err(Error::BracketFailed { lo, hi });
    }
    Ok(golden_section(risk, lo, hi, 1e-10).x)
}
