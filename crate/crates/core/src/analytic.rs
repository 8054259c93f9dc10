//! Closed-form class-wise risks of the risk-minimising uniform-weight linear
//! classifier, for natural and ℓ∞-adversarial training, with and without
//! same-class mixup.
//!
//! With uniform weights the classifier is `sign(Σx_i + t)` and the class-wise
//! risks at threshold `t` are
//!
//! ```text
//! R+(t) = Φ((-t - d(μ+ - ε)) / (sqrt(d g) σ+))
//! R-(t) = Φ(( t - d(μ- - ε)) / (sqrt(d g) σ-))
//! ```
//!
//! where `g = g(λ)` (1 without mixup) and `ε = 0` for natural risk. The
//! optimal `t` minimises `α R+ + (1 - α) R-`; setting the derivative to zero
//! gives
//!
//! ```text
//! (t + d μ+')² / σ+² - (t - d μ-')² / σ-² = 2 K g,   K = d log(α σ- / ((1 - α) σ+))
//! ```
//!
//! with `μ±' = μ± - ε`. Equal variances make this linear in `t`; otherwise it
//! is a quadratic whose two roots are both evaluated and the one with lower
//! overall risk is kept.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Label, MixupSpec, ModelParams};
use crate::normal::phi;

/// ℓ∞ perturbation radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationBudget {
    epsilon: f64,
}

impl PerturbationBudget {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::param("epsilon", format!("{epsilon} must be finite and >= 0")));
        }
        Ok(PerturbationBudget { epsilon })
    }

    pub fn zero() -> Self {
        PerturbationBudget { epsilon: 0.0 }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Rejects `2ε >= μ+ + μ-`.
    pub fn check(&self, params: &ModelParams) -> Result<()> {
        let separation = params.separation();
        if 2.0 * self.epsilon >= separation {
            return Err(Error::SeparationExceeded { two_eps: 2.0 * self.epsilon, separation });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attack {
    Natural,
    Adversarial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mixing {
    Plain,
    Mixup,
}

/// Which risk a [`RiskPair`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Regime {
    pub attack: Attack,
    pub mixing: Mixing,
}

impl Regime {
    pub const ALL: [Regime; 4] = [
        Regime { attack: Attack::Natural, mixing: Mixing::Plain },
        Regime { attack: Attack::Natural, mixing: Mixing::Mixup },
        Regime { attack: Attack::Adversarial, mixing: Mixing::Plain },
        Regime { attack: Attack::Adversarial, mixing: Mixing::Mixup },
    ];

    pub fn new(attack: Attack, mixing: Mixing) -> Self {
        Regime { attack, mixing }
    }

    fn from_spec(attack: Attack, spec: &MixupSpec) -> Self {
        let mixing = if spec.is_plain() { Mixing::Plain } else { Mixing::Mixup };
        Regime { attack, mixing }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = match self.attack {
            Attack::Natural => "natural",
            Attack::Adversarial => "adversarial",
        };
        let m = match self.mixing {
            Mixing::Plain => "plain",
            Mixing::Mixup => "mixup",
        };
        write!(f, "{a}_{m}")
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Regime::ALL.into_iter().find(|r| r.to_string() == s).ok_or_else(|| format!("unknown regime `{s}`"))
    }
}

impl Serialize for Regime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Regime {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for Attack {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "natural" => Ok(Attack::Natural),
            "adversarial" => Ok(Attack::Adversarial),
            other => Err(format!("unknown attack regime `{other}`")),
        }
    }
}

impl fmt::Display for Attack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Attack::Natural => "natural",
            Attack::Adversarial => "adversarial",
        })
    }
}

/// Derived constants of the threshold solution. Fields that do not apply to
/// the requested regime are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnalyticConstants {
    pub k: f64,
    /// Natural threshold, unequal variances.
    pub eta_star: Option<f64>,
    /// Natural threshold, equal variances.
    pub t_star: Option<f64>,
    /// Adversarial threshold.
    pub s_star: Option<f64>,
    /// `-d(μ+σ-² + μ-σ+² - ε(σ+² + σ-²))`.
    pub m: Option<f64>,
    /// `d²(μ+ + μ- - 2ε)²`.
    pub m_prime: Option<f64>,
    /// Lower bound on `g` for the natural ordering chain.
    pub a: Option<f64>,
    /// Lower bound on `g` for the adversarial ordering chain.
    pub b: Option<f64>,
}

impl AnalyticConstants {
    /// The threshold `t = b/w` this solution describes, whichever branch set it.
    pub fn threshold(&self) -> Option<f64> {
        self.s_star.or(self.eta_star).or(self.t_star)
    }
}

/// Class-wise risks of one classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskPair {
    pub r_plus: f64,
    pub r_minus: f64,
    pub delta: f64,
    pub threshold: f64,
    pub regime: Regime,
}

impl RiskPair {
    pub fn new(r_plus: f64, r_minus: f64, threshold: f64, regime: Regime) -> Self {
        RiskPair { r_plus, r_minus, delta: (r_plus - r_minus).abs(), threshold, regime }
    }

    pub fn risk(&self, y: Label) -> f64 {
        match y {
            Label::Pos => self.r_plus,
            Label::Neg => self.r_minus,
        }
    }

    /// The class with the strictly lower risk, if any.
    pub fn favored(&self) -> Option<Label> {
        if self.r_plus < self.r_minus {
            Some(Label::Pos)
        } else if self.r_minus < self.r_plus {
            Some(Label::Neg)
        } else {
            None
        }
    }

    pub fn worst(&self) -> f64 {
        self.r_plus.max(self.r_minus)
    }
}

/// `|R+ - R-|`.
pub fn disparity(pair: &RiskPair) -> f64 {
    (pair.r_plus - pair.r_minus).abs()
}

/// `K = d log(α σ- / ((1 - α) σ+))`.
pub fn bias_constant_k(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    Ok(k_unchecked(params))
}

fn k_unchecked(p: &ModelParams) -> f64 {
    p.d as f64 * ((p.alpha * p.sigma_minus) / ((1.0 - p.alpha) * p.sigma_plus)).ln()
}

/// Everything the threshold equation needs, with the means already shifted
/// by the perturbation budget.
#[derive(Debug, Clone, Copy)]
struct Problem {
    d: f64,
    mu_plus: f64,
    mu_minus: f64,
    sigma_plus: f64,
    sigma_minus: f64,
    alpha: f64,
    g: f64,
    k: f64,
    equal_variance: bool,
}

impl Problem {
    fn new(params: &ModelParams, spec: &MixupSpec, epsilon: f64) -> Result<Self> {
        params.validate()?;
        Ok(Problem {
            d: params.d as f64,
            mu_plus: params.mu_plus - epsilon,
            mu_minus: params.mu_minus - epsilon,
            sigma_plus: params.sigma_plus,
            sigma_minus: params.sigma_minus,
            alpha: params.alpha,
            g: spec.g(),
            k: k_unchecked(params),
            equal_variance: params.equal_variance(),
        })
    }

    fn separation(&self) -> f64 {
        self.mu_plus + self.mu_minus
    }

    fn class_risks(&self, t: f64) -> (f64, f64) {
        let scale = (self.d * self.g).sqrt();
        let r_plus = phi((-t - self.d * self.mu_plus) / (scale * self.sigma_plus));
        let r_minus = phi((t - self.d * self.mu_minus) / (scale * self.sigma_minus));
        (r_plus, r_minus)
    }

    fn overall(&self, t: f64) -> f64 {
        let (rp, rm) = self.class_risks(t);
        self.alpha * rp + (1.0 - self.alpha) * rm
    }

    /// `-d(μ+'σ-² + μ-'σ+²)`, which expands to the `M` of the adversarial
    /// solution when the means carry the `ε` shift.
    fn m(&self) -> f64 {
        let vp = self.sigma_plus * self.sigma_plus;
        let vm = self.sigma_minus * self.sigma_minus;
        -self.d * (self.mu_plus * vm + self.mu_minus * vp)
    }

    fn m_prime(&self) -> f64 {
        let s = self.d * self.separation();
        s * s
    }

    fn equal_sigma(&self) -> f64 {
        (self.sigma_plus * self.sigma_minus).sqrt()
    }

    fn equal_variance_threshold(&self) -> f64 {
        let var = self.sigma_plus * self.sigma_minus;
        let d = self.d;
        (-d * d * (self.mu_plus.powi(2) - self.mu_minus.powi(2)) + 2.0 * self.k * var * self.g)
            / (2.0 * d * self.separation())
    }

    /// `(plus, minus)` roots of the unequal-variance quadratic.
    fn quadratic_roots(&self) -> Result<(f64, f64)> {
        let vp = self.sigma_plus * self.sigma_plus;
        let vm = self.sigma_minus * self.sigma_minus;
        let diff = vm - vp;
        let ds = self.d * self.separation();
        let radicand = 1.0 + 2.0 * self.k * self.g * diff / (ds * ds);
        if radicand < 0.0 {
            return Err(Error::NoRealRoot(radicand));
        }
        let root = self.sigma_plus * self.sigma_minus * ds * radicand.sqrt();
        let m = self.m();
        Ok(((m + root) / diff, (m - root) / diff))
    }

    fn threshold(&self) -> Result<f64> {
        if self.equal_variance {
            return Ok(self.equal_variance_threshold());
        }
        let (plus, minus) = self.quadratic_roots()?;
        Ok(if self.overall(minus) < self.overall(plus) { minus } else { plus })
    }

    fn risk_pair(&self, regime: Regime) -> Result<RiskPair> {
        let t = self.threshold()?;
        let (r_plus, r_minus) = if self.equal_variance {
            // Closed form after substituting t into the class risks.
            let sigma = self.equal_sigma();
            let s = self.separation();
            let d = self.d;
            let num = d * d * s * s;
            let bias = 2.0 * self.k * sigma * sigma * self.g;
            let den = 2.0 * sigma * s * (d * d * d * self.g).sqrt();
            (phi((-num - bias) / den), phi((-num + bias) / den))
        } else {
            self.class_risks(t)
        };
        Ok(RiskPair::new(r_plus, r_minus, t, regime))
    }
}

/// Optimal natural threshold (`t*` for equal variances, `η*` otherwise).
pub fn natural_threshold(params: &ModelParams, spec: &MixupSpec) -> Result<AnalyticConstants> {
    let pr = Problem::new(params, spec, 0.0)?;
    let t = pr.threshold()?;
    let mut c = AnalyticConstants { k: pr.k, ..Default::default() };
    if pr.equal_variance {
        c.t_star = Some(t);
    } else {
        c.eta_star = Some(t);
    }
    Ok(c)
}

/// Optimal adversarial threshold `s*`.
pub fn adversarial_threshold(
    params: &ModelParams,
    spec: &MixupSpec,
    budget: &PerturbationBudget,
) -> Result<AnalyticConstants> {
    params.validate()?;
    budget.check(params)?;
    let pr = Problem::new(params, spec, budget.epsilon())?;
    Ok(AnalyticConstants {
        k: pr.k,
        s_star: Some(pr.threshold()?),
        m: Some(pr.m()),
        m_prime: Some(pr.m_prime()),
        ..Default::default()
    })
}

/// Both roots of the unequal-variance threshold quadratic as `(plus, minus)`,
/// or `None` for equal variances.
pub fn threshold_roots(
    params: &ModelParams,
    spec: &MixupSpec,
    budget: &PerturbationBudget,
) -> Result<Option<(f64, f64)>> {
    params.validate()?;
    budget.check(params)?;
    let pr = Problem::new(params, spec, budget.epsilon())?;
    if pr.equal_variance {
        return Ok(None);
    }
    pr.quadratic_roots().map(Some)
}

/// Class-wise natural risks of the optimal (mixup-)trained classifier,
/// evaluated on the distribution it was trained on.
pub fn classwise_natural_risk(params: &ModelParams, spec: &MixupSpec) -> Result<RiskPair> {
    Problem::new(params, spec, 0.0)?.risk_pair(Regime::from_spec(Attack::Natural, spec))
}

/// Class-wise adversarial risks of the optimal (mixup-)adversarially
/// trained classifier.
pub fn classwise_adversarial_risk(
    params: &ModelParams,
    spec: &MixupSpec,
    budget: &PerturbationBudget,
) -> Result<RiskPair> {
    params.validate()?;
    budget.check(params)?;
    Problem::new(params, spec, budget.epsilon())?.risk_pair(Regime::from_spec(Attack::Adversarial, spec))
}

/// Dispatch on `attack`; the budget is ignored for natural risk.
pub fn classwise_risk(
    attack: Attack,
    params: &ModelParams,
    spec: &MixupSpec,
    budget: &PerturbationBudget,
) -> Result<RiskPair> {
    match attack {
        Attack::Natural => classwise_natural_risk(params, spec),
        Attack::Adversarial => classwise_adversarial_risk(params, spec, budget),
    }
}

/// Class-wise risks of the uniform-weight classifier with threshold `t`,
/// evaluated on the (mixup) distribution under budget `ε`.
pub fn classwise_risk_at(
    params: &ModelParams,
    spec: &MixupSpec,
    budget: &PerturbationBudget,
    t: f64,
) -> Result<(f64, f64)> {
    params.validate()?;
    budget.check(params)?;
    Ok(Problem::new(params, spec, budget.epsilon())?.class_risks(t))
}

/// `α R+(t) + (1 - α) R-(t)`.
pub fn overall_risk(
    params: &ModelParams,
    spec: &MixupSpec,
    budget: &PerturbationBudget,
    t: f64,
) -> Result<f64> {
    params.validate()?;
    budget.check(params)?;
    Ok(Problem::new(params, spec, budget.epsilon())?.overall(t))
}

/// Lower bounds on `g(λ)` above which the four-risk ordering
/// `R+(plain) <= R+(mixup) <= R-(mixup) <= R-(plain)` holds (for `K > 0`).
///
/// With `P = sqrt(d) S / (2σ)` and `Q = K σ / (S d^{3/2})` the plain and
/// mixup class risks are `Φ(-P/sqrt(g) ∓ Q sqrt(g))`, and the chain holds
/// exactly when `sqrt(g) >= P/Q`. Hence `A = (d² S²)² / (4 K² σ⁴)` and, with
/// `S` replaced by `S - 2ε`, `B = M'² / (4 K² σ⁴)`.
pub fn ordering_bounds(
    params: &ModelParams,
    budget: Option<&PerturbationBudget>,
) -> Result<AnalyticConstants> {
    params.validate()?;
    if !params.equal_variance() {
        return Err(Error::UnequalVariance);
    }
    let k = k_unchecked(params);
    if k.abs() < 1e-12 {
        return Err(Error::ZeroBiasConstant);
    }
    let sigma2 = params.sigma_plus * params.sigma_minus;
    let denom = 4.0 * k * k * sigma2 * sigma2;
    let d = params.d as f64;
    let m0 = (d * params.separation()).powi(2);
    let mut c = AnalyticConstants { k, a: Some(m0 * m0 / denom), ..Default::default() };
    if let Some(budget) = budget {
        budget.check(params)?;
        let m_prime = (d * (params.separation() - 2.0 * budget.epsilon())).powi(2);
        c.m_prime = Some(m_prime);
        c.b = Some(m_prime * m_prime / denom);
    }
    Ok(c)
}
