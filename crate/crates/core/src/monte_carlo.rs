//! Monte Carlo estimates of class-wise risk and grid validation of the
//! closed forms in [`crate::analytic`].

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{classwise_risk, Attack, PerturbationBudget, RiskPair};
use crate::classifier::LinearClassifier;
use crate::error::{Error, Result};
use crate::model::{Label, MixupSpec, ModelParams};
use crate::rng::{child_seed, substream, Purpose, BLOCK};

/// Smallest per-class sample count accepted by [`estimate_classwise_risk`].
pub const MIN_SAMPLES: usize = 10_000;

/// Default pass bound, in standard errors.
pub const DEFAULT_MULTIPLIER: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

impl RiskEstimate {
    /// Binomial estimate from an error count.
    pub fn from_counts(errors: u64, n: usize, seed: u64) -> Self {
        let value = errors as f64 / n as f64;
        RiskEstimate { value, stderr: (value * (1.0 - value) / n as f64).sqrt(), n, seed }
    }

    pub fn within(&self, target: f64, multiplier: f64) -> bool {
        (target - self.value).abs() <= multiplier * self.stderr
    }
}

fn count_errors(
    params: &ModelParams,
    lambda: Option<f64>,
    clf: &LinearClassifier,
    epsilon: Option<f64>,
    y: Label,
    n: usize,
    seed: u64,
) -> u64 {
    let purpose = match y {
        Label::Pos => Purpose::ClassPlus,
        Label::Neg => Purpose::ClassMinus,
    };
    let d = params.d;
    let mean = params.mean(y);
    let sd = params.sigma(y);
    let blocks = n.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, purpose, b as u64);
            let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            };
            let mut x = vec![0.0; d];
            let mut xp = vec![0.0; d];
            let mut errors = 0u64;
            for _ in 0..BLOCK.min(n - b * BLOCK) {
                match lambda {
                    Some(l) => {
                        for xi in x.iter_mut() {
                            *xi = l * draw(&mut rng);
                        }
                        for xi in x.iter_mut() {
                            *xi += (1.0 - l) * draw(&mut rng);
                        }
                    }
                    None => x.iter_mut().for_each(|xi| *xi = draw(&mut rng)),
                }
                let m = match epsilon {
                    Some(e) => {
                        clf.perturb_into(&x, y, e, &mut xp);
                        clf.margin_unchecked(&xp)
                    }
                    None => clf.margin_unchecked(&x),
                };
                errors += (Label::from_sign(m) != y) as u64;
            }
            errors
        })
        .sum()
}

/// Error frequency of `clf` on `n` fresh samples of each class.
///
/// With `eval_on_mixup` every sample is an actual same-class mix
/// `λ x_i + (1 - λ) x_j` of two independent base draws; otherwise samples
/// come from the base distribution. With a budget the worst-case
/// perturbation is applied before predicting.
#[allow(clippy::too_many_arguments)]
pub fn estimate_classwise_risk(
    params: &ModelParams,
    spec: &MixupSpec,
    clf: &LinearClassifier,
    budget: Option<&PerturbationBudget>,
    n: usize,
    seed: u64,
    eval_on_mixup: bool,
) -> Result<(RiskEstimate, RiskEstimate)> {
    params.validate()?;
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: n, min: MIN_SAMPLES });
    }
    if clf.dim() != params.d {
        return Err(Error::DimensionMismatch { expected: params.d, got: clf.dim() });
    }
    if let Some(b) = budget {
        b.check(params)?;
    }
    let lambda = eval_on_mixup.then(|| spec.lambda());
    let epsilon = budget.map(|b| b.epsilon());
    let plus = count_errors(params, lambda, clf, epsilon, Label::Pos, n, seed);
    let minus = count_errors(params, lambda, clf, epsilon, Label::Neg, n, seed);
    Ok((RiskEstimate::from_counts(plus, n, seed), RiskEstimate::from_counts(minus, n, seed)))
}

/// One grid point of a formula validation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationPoint {
    pub attack: Attack,
    pub params: ModelParams,
    pub lambda: f64,
    pub epsilon: f64,
}

impl ValidationPoint {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        attack: Attack,
        d: usize,
        mu_plus: f64,
        mu_minus: f64,
        sigma_plus: f64,
        sigma_minus: f64,
        alpha: f64,
        lambda: f64,
        epsilon: f64,
    ) -> Self {
        ValidationPoint {
            attack,
            params: ModelParams { mu_plus, mu_minus, sigma_plus, sigma_minus, alpha, d },
            lambda,
            epsilon,
        }
    }

    pub fn spec(&self) -> Result<MixupSpec> {
        MixupSpec::new(self.lambda)
    }

    pub fn budget(&self) -> Result<PerturbationBudget> {
        PerturbationBudget::new(self.epsilon)
    }

    /// Closed-form risks for this point.
    pub fn analytic(&self) -> Result<RiskPair> {
        classwise_risk(self.attack, &self.params, &self.spec()?, &self.budget()?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub point: ValidationPoint,
    pub multiplier: f64,
    pub outcome: std::result::Result<ValidationOutcome, Error>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOutcome {
    pub analytic: RiskPair,
    pub plus: RiskEstimate,
    pub minus: RiskEstimate,
    pub pass_plus: bool,
    pub pass_minus: bool,
}

impl ValidationReport {
    /// True only for rows that evaluated and agreed on both classes.
    pub fn passed(&self) -> bool {
        matches!(&self.outcome, Ok(o) if o.pass_plus && o.pass_minus)
    }
}

fn validate_point(p: &ValidationPoint, n: usize, multiplier: f64, seed: u64) -> Result<ValidationOutcome> {
    let analytic = p.analytic()?;
    let spec = p.spec()?;
    let budget = p.budget()?;
    let clf = LinearClassifier::from_threshold(analytic.threshold, p.params.d);
    let attack = (p.attack == Attack::Adversarial).then_some(&budget);
    let (plus, minus) = estimate_classwise_risk(&p.params, &spec, &clf, attack, n, seed, true)?;
    Ok(ValidationOutcome {
        analytic,
        plus,
        minus,
        pass_plus: plus.within(analytic.r_plus, multiplier),
        pass_minus: minus.within(analytic.r_minus, multiplier),
    })
}

/// Compares closed-form risks with Monte Carlo estimates on every grid point,
/// using the closed-form threshold and evaluating on the mixup distribution.
/// Points that fail validation become erroring rows.
pub fn validate_formula(
    grid: &[ValidationPoint],
    n: usize,
    multiplier: f64,
    seed: u64,
) -> Vec<ValidationReport> {
    grid.par_iter()
        .enumerate()
        .map(|(i, p)| ValidationReport {
            point: *p,
            multiplier,
            outcome: validate_point(p, n, multiplier, child_seed(seed, Purpose::GridPoint, i as u64)),
        })
        .collect()
}

/// The fixed 20-point validation grid: d ∈ {2, 5, 10, 50}, α ∈ {0.5, 0.6, 0.7},
/// (σ+, σ-) ∈ {(1, 1), (1, 1.5)}, λ ∈ {0, 0.3, 0.5}, ε ∈ {0, 0.1, 0.3}.
/// Means shrink with `d` so every class risk stays well inside (0, 1).
pub fn default_grid() -> Vec<ValidationPoint> {
    use Attack::{Adversarial as Adv, Natural as Nat};
    let p = ValidationPoint::new;
    vec![
        p(Nat, 2, 1.0, 1.0, 1.0, 1.0, 0.5, 0.0, 0.0),
        p(Nat, 2, 1.0, 0.8, 1.0, 1.5, 0.6, 0.3, 0.0),
        p(Nat, 5, 0.6, 0.6, 1.0, 1.0, 0.6, 0.5, 0.0),
        p(Nat, 5, 0.6, 0.5, 1.0, 1.5, 0.7, 0.0, 0.0),
        p(Nat, 10, 0.45, 0.4, 1.0, 1.0, 0.7, 0.3, 0.0),
        p(Nat, 10, 0.45, 0.45, 1.0, 1.5, 0.5, 0.5, 0.0),
        p(Nat, 50, 0.3, 0.25, 1.0, 1.0, 0.6, 0.0, 0.0),
        p(Nat, 50, 0.3, 0.3, 1.0, 1.5, 0.7, 0.5, 0.0),
        p(Adv, 2, 1.0, 1.0, 1.0, 1.0, 0.7, 0.5, 0.1),
        p(Adv, 2, 1.0, 0.8, 1.0, 1.5, 0.5, 0.0, 0.1),
        p(Adv, 5, 0.7, 0.6, 1.0, 1.0, 0.5, 0.3, 0.1),
        p(Adv, 5, 0.7, 0.7, 1.0, 1.5, 0.6, 0.5, 0.1),
        p(Adv, 10, 0.5, 0.5, 1.0, 1.0, 0.6, 0.0, 0.1),
        p(Adv, 10, 0.5, 0.45, 1.0, 1.5, 0.7, 0.3, 0.1),
        p(Adv, 50, 0.35, 0.35, 1.0, 1.0, 0.5, 0.5, 0.1),
        p(Adv, 50, 0.35, 0.3, 1.0, 1.5, 0.6, 0.3, 0.1),
        p(Adv, 2, 1.2, 1.0, 1.0, 1.0, 0.6, 0.3, 0.3),
        p(Adv, 5, 0.9, 0.9, 1.0, 1.5, 0.7, 0.0, 0.3),
        p(Adv, 10, 0.7, 0.65, 1.0, 1.0, 0.7, 0.5, 0.3),
        p(Adv, 50, 0.5, 0.5, 1.0, 1.5, 0.5, 0.5, 0.3),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn always_positive_classifier() {
        let p = ModelParams::symmetric(3, 1.0, 1.0, 0.5).unwrap();
        let clf = LinearClassifier::from_threshold(1e9, 3);
        let (plus, minus) =
            estimate_classwise_risk(&p, &MixupSpec::plain(), &clf, None, 10_000, 1, false).unwrap();
        assert_eq!((plus.value, minus.value), (0.0, 1.0));
        assert_eq!((plus.stderr, minus.stderr), (0.0, 0.0));
    }

    #[test]
    fn zero_budget_is_bitwise_identical() {
        let p = ModelParams::new(4, 0.5, 0.4, 1.0, 1.3, 0.6).unwrap();
        let clf = LinearClassifier::from_threshold(0.3, 4);
        let spec = MixupSpec::new(0.3).unwrap();
        let zero = PerturbationBudget::zero();
        for mix in [false, true] {
            let a = estimate_classwise_risk(&p, &spec, &clf, None, 20_000, 9, mix).unwrap();
            let b = estimate_classwise_risk(&p, &spec, &clf, Some(&zero), 20_000, 9, mix).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rejects_small_n_and_bad_dims() {
        let p = ModelParams::symmetric(3, 1.0, 1.0, 0.5).unwrap();
        let clf = LinearClassifier::from_threshold(0.0, 3);
        let spec = MixupSpec::plain();
        assert!(matches!(
            estimate_classwise_risk(&p, &spec, &clf, None, 9_999, 1, false),
            Err(Error::TooFewSamples { .. })
        ));
        let clf2 = LinearClassifier::from_threshold(0.0, 2);
        assert!(estimate_classwise_risk(&p, &spec, &clf2, None, 10_000, 1, false).is_err());
        let big = PerturbationBudget::new(1.0).unwrap();
        assert!(estimate_classwise_risk(&p, &spec, &clf, Some(&big), 10_000, 1, false).is_err());
    }

    #[test]
    fn empty_grid_gives_empty_report() {
        assert!(validate_formula(&[], 10_000, 4.0, 0).is_empty());
    }

    #[test]
    fn invalid_point_is_an_erroring_row() {
        let bad = ValidationPoint::new(Attack::Adversarial, 2, 0.5, 0.5, 1.0, 1.0, 0.6, 0.0, 0.5);
        let good = ValidationPoint::new(Attack::Natural, 2, 1.0, 1.0, 1.0, 1.0, 0.6, 0.0, 0.0);
        let rows = validate_formula(&[bad, good], 10_000, 4.0, 3);
        assert_eq!(rows.len(), 2);
        assert!(matches!(rows[0].outcome, Err(Error::SeparationExceeded { .. })));
        assert!(!rows[0].passed());
        assert!(rows[1].outcome.is_ok());
    }

    #[test]
    fn default_grid_is_valid_and_covers_values() {
        let g = default_grid();
        assert_eq!(g.len(), 20);
        for p in &g {
            let r = p.analytic().unwrap();
            assert!(r.r_plus > 1e-3 && r.r_plus < 0.5, "{p:?} {r:?}");
            assert!(r.r_minus > 1e-3 && r.r_minus < 0.5, "{p:?} {r:?}");
        }
        for d in [2, 5, 10, 50] {
            assert!(g.iter().any(|p| p.params.d == d));
        }
        for v in [0.0, 0.3, 0.5] {
            assert!(g.iter().any(|p| p.lambda == v));
        }
        for v in [0.0, 0.1, 0.3] {
            assert!(g.iter().any(|p| p.epsilon == v));
        }
        for v in [0.5, 0.6, 0.7] {
            assert!(g.iter().any(|p| p.params.alpha == v));
        }
    }
}
