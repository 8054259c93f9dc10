//! Logistic-regression training of linear classifiers under natural, FGSM
//! adversarial, and same-class mixup-adversarial regimes.
//!
//! Mixup-adversarial batches are built mix-then-perturb: same-class pairs are
//! mixed first and the FGSM step is taken around the mixed point.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::analytic::{Mixing, PerturbationBudget, RiskPair};
use crate::classifier::{empirical_classwise_risk, LinearClassifier};
use crate::error::{Error, Result};
use crate::model::{mix, same_class_pairs, Dataset, Label, LabeledSample};
use crate::rng::{child_seed, substream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainRegime {
    Natural,
    Adversarial,
    MixupAdversarial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    /// Gradient descent with heavy-ball momentum 0.9.
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lr_decay_factor: f64,
    pub lr_decay_every: usize,
    pub seed: u64,
    pub regime: TrainRegime,
    pub epsilon: f64,
    pub lambda: f64,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 80,
            batch_size: 256,
            learning_rate: 1e-3,
            lr_decay_factor: 0.1,
            lr_decay_every: 50,
            seed: 0,
            regime: TrainRegime::Natural,
            epsilon: 0.0,
            lambda: 0.5,
            optimizer: OptimizerKind::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::param("epochs", "must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size", "must be >= 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::param("learning_rate", "must be finite and > 0"));
        }
        if !(self.lr_decay_factor.is_finite() && self.lr_decay_factor > 0.0) {
            return Err(Error::param("lr_decay_factor", "must be finite and > 0"));
        }
        if self.lr_decay_every == 0 {
            return Err(Error::param("lr_decay_every", "must be >= 1"));
        }
        PerturbationBudget::new(self.epsilon)?;
        crate::model::g_lambda(self.lambda)?;
        Ok(())
    }

    fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.lr_decay_factor.powi((epoch / self.lr_decay_every) as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub classifier: LinearClassifier,
    /// Mean training loss of each epoch, on the batches actually trained on.
    pub epoch_loss: Vec<f64>,
    /// Held-out natural risks.
    pub natural: RiskPair,
    /// Held-out adversarial risks at the configured budget.
    pub adversarial: RiskPair,
    /// `b / mean(w)`.
    pub threshold: f64,
    /// Batches in which a class had fewer than two samples and went unmixed.
    pub short_class_batches: usize,
    pub train_size: usize,
    pub holdout_size: usize,
}

/// FGSM step `x + ε sign(∇_x ℓ)` for the logistic loss. For a linear model
/// `∇_x ℓ = -y σ(-y m) w` and `σ(·) > 0`, so the step is `-ε y sign(w)`
/// coordinatewise (zero where `w_i = 0`).
pub fn fgsm_perturb(
    clf: &LinearClassifier,
    batch: &[LabeledSample],
    epsilon: f64,
) -> Result<Vec<LabeledSample>> {
    batch
        .iter()
        .map(|s| {
            if s.x.len() != clf.dim() {
                return Err(Error::DimensionMismatch { expected: clf.dim(), got: s.x.len() });
            }
            Ok(fgsm_one(clf, s, epsilon))
        })
        .collect()
}

fn fgsm_one(clf: &LinearClassifier, s: &LabeledSample, epsilon: f64) -> LabeledSample {
    let y = s.y.sign();
    let x =
        s.x.iter()
            .zip(&clf.w)
            .map(|(&xi, &wi)| {
                let grad_sign = if wi == 0.0 { 0.0 } else { -y * wi.signum() };
                xi + epsilon * grad_sign
            })
            .collect();
    LabeledSample { x, y: s.y }
}

/// A mixed-then-perturbed batch.
#[derive(Debug, Clone, PartialEq)]
pub struct MixupBatch {
    pub samples: Vec<LabeledSample>,
    /// Classes present with a single sample; those pass through unmixed.
    pub short_classes: usize,
}

/// Pairs same-class samples of `batch`, mixes each pair with `lambda`, then
/// applies [`fgsm_perturb`] around the mixed points.
pub fn make_mixup_adversarial_batch(
    clf: &LinearClassifier,
    batch: &[LabeledSample],
    epsilon: f64,
    lambda: f64,
    seed: u64,
) -> Result<MixupBatch> {
    crate::model::g_lambda(lambda)?;
    if let Some(s) = batch.iter().find(|s| s.x.len() != clf.dim()) {
        return Err(Error::DimensionMismatch { expected: clf.dim(), got: s.x.len() });
    }
    let mut rng = substream(seed, Purpose::BatchMix, 0);
    let (pairs, short) = same_class_pairs(batch.iter().map(|s| s.y), &mut rng);
    let mut samples: Vec<LabeledSample> = pairs
        .into_iter()
        .map(|(i, j)| LabeledSample { x: mix(&batch[i].x, &batch[j].x, lambda), y: batch[i].y })
        .collect();
    for y in &short {
        log::debug!("class {y} has a single sample in this batch; passing it through unmixed");
        samples.extend(batch.iter().filter(|s| s.y == *y).cloned());
    }
    let samples = samples.iter().map(|s| fgsm_one(clf, s, epsilon)).collect();
    Ok(MixupBatch { samples, short_classes: short.len() })
}

/// `log(1 + exp(-z))` without overflow.
fn softplus_neg(z: f64) -> f64 {
    if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

/// `1 / (1 + exp(z))`.
fn sigmoid_neg(z: f64) -> f64 {
    if z > 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

struct Optimizer {
    kind: OptimizerKind,
    first: Vec<f64>,
    second: Vec<f64>,
    steps: i32,
}

impl Optimizer {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(kind: OptimizerKind, len: usize) -> Self {
        Optimizer { kind, first: vec![0.0; len], second: vec![0.0; len], steps: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.steps += 1;
        match self.kind {
            OptimizerKind::Adam => {
                let c1 = 1.0 - Self::BETA1.powi(self.steps);
                let c2 = 1.0 - Self::BETA2.powi(self.steps);
                for i in 0..params.len() {
                    self.first[i] = Self::BETA1 * self.first[i] + (1.0 - Self::BETA1) * grad[i];
                    self.second[i] = Self::BETA2 * self.second[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
                    let m = self.first[i] / c1;
                    let v = self.second[i] / c2;
                    params[i] -= lr * m / (v.sqrt() + Self::EPS);
                }
            }
            OptimizerKind::Sgd => {
                for i in 0..params.len() {
                    self.first[i] = Self::BETA1 * self.first[i] + grad[i];
                    params[i] -= lr * self.first[i];
                }
            }
        }
    }
}

/// Accumulates the mean logistic loss and its gradient over `batch` into
/// `grad` (weights then bias). Returns the summed loss.
fn logistic_gradient(clf: &LinearClassifier, batch: &[LabeledSample], grad: &mut [f64]) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let d = clf.dim();
    let mut total = 0.0;
    for s in batch {
        let y = s.y.sign();
        let z = y * clf.margin_unchecked(&s.x);
        total += softplus_neg(z);
        let coeff = -y * sigmoid_neg(z);
        for (g, xi) in grad[..d].iter_mut().zip(&s.x) {
            *g += coeff * xi;
        }
        grad[d] += coeff;
    }
    let n = batch.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    total
}

/// Deterministic 80/20 split keyed by the dataset seed.
pub fn holdout_split(data: &Dataset) -> (Dataset, Dataset) {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut substream(data.seed, Purpose::Split, 0));
    let holdout = data.len() / 5;
    let pick = |ids: &[usize]| Dataset {
        samples: ids.iter().map(|&i| data.samples[i].clone()).collect(),
        params: data.params,
        seed: data.seed,
    };
    (pick(&idx[holdout..]), pick(&idx[..holdout]))
}

/// Trains a logistic-regression classifier on 80% of `data` and reports
/// class-wise natural and adversarial risks on the remaining 20%.
pub fn train(data: &Dataset, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    for y in Label::BOTH {
        if data.class_count(y) == 0 {
            return Err(Error::MissingClass(y));
        }
    }
    let d = data.params.d;
    if let Some(s) = data.samples.iter().find(|s| s.x.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: s.x.len() });
    }
    let (train_set, holdout) = holdout_split(data);
    let n = train_set.len();

    let mut clf = LinearClassifier { w: vec![0.0; d], b: 0.0 };
    let mut theta = vec![0.0; d + 1];
    let mut grad = vec![0.0; d + 1];
    let mut opt = Optimizer::new(config.optimizer, d + 1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    let mut short_class_batches = 0;
    let batches_per_epoch = n.div_ceil(config.batch_size);

    for epoch in 0..config.epochs {
        let lr = config.learning_rate_at(epoch);
        order.shuffle(&mut substream(config.seed, Purpose::EpochShuffle, epoch as u64));
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for (k, ids) in order.chunks(config.batch_size).enumerate() {
            let raw: Vec<LabeledSample> = ids.iter().map(|&i| train_set.samples[i].clone()).collect();
            let batch = match config.regime {
                TrainRegime::Natural => raw,
                TrainRegime::Adversarial => raw.iter().map(|s| fgsm_one(&clf, s, config.epsilon)).collect(),
                TrainRegime::MixupAdversarial => {
                    let index = (epoch * batches_per_epoch + k) as u64;
                    let seed = child_seed(config.seed, Purpose::BatchMix, index);
                    let mixed =
                        make_mixup_adversarial_batch(&clf, &raw, config.epsilon, config.lambda, seed)?;
                    if mixed.short_classes > 0 {
                        short_class_batches += 1;
                    }
                    mixed.samples
                }
            };
            if batch.is_empty() {
                continue;
            }
            loss_sum += logistic_gradient(&clf, &batch, &mut grad);
            seen += batch.len();
            opt.step(&mut theta, &grad, lr);
            clf.w.copy_from_slice(&theta[..d]);
            clf.b = theta[d];
        }
        let loss = loss_sum / seen.max(1) as f64;
        if !loss.is_finite() || theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { epoch: epoch + 1 });
        }
        epoch_loss.push(loss);
    }
    if short_class_batches > 0 {
        log::info!("{short_class_batches} batches had a class with a single sample");
    }

    let budget = PerturbationBudget::new(config.epsilon)?;
    let mut natural = empirical_classwise_risk(&clf, &holdout, None)?;
    let mut adversarial = empirical_classwise_risk(&clf, &holdout, Some(&budget))?;
    if config.regime == TrainRegime::MixupAdversarial {
        natural.regime.mixing = Mixing::Mixup;
        adversarial.regime.mixing = Mixing::Mixup;
    }
    Ok(TrainReport {
        threshold: clf.mean_threshold(),
        classifier: clf,
        epoch_loss,
        natural,
        adversarial,
        short_class_batches,
        train_size: n,
        holdout_size: holdout.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::worst_case_perturbation;
    use crate::model::{sample_labeled, ModelParams};

    fn sample(x: &[f64], y: Label) -> LabeledSample {
        LabeledSample { x: x.to_vec(), y }
    }

    #[test]
    fn fgsm_examples() {
        let clf = LinearClassifier::new(vec![2.0, -1.0], 0.0).unwrap();
        let batch = vec![sample(&[0.0, 0.0], Label::Pos)];
        assert_eq!(fgsm_perturb(&clf, &batch, 0.0).unwrap(), batch);
        assert_eq!(fgsm_perturb(&clf, &batch, 0.1).unwrap()[0].x, vec![-0.1, 0.1]);
        let bad = vec![sample(&[0.0], Label::Pos)];
        assert!(fgsm_perturb(&clf, &bad, 0.1).is_err());
    }

    #[test]
    fn fgsm_matches_numeric_gradient_sign() {
        let clf = LinearClassifier::new(vec![0.7, -1.3, 0.2], 0.4).unwrap();
        let s = sample(&[0.3, 0.1, -0.5], Label::Neg);
        let loss = |x: &[f64]| softplus_neg(s.y.sign() * clf.margin_unchecked(x));
        let h = 1e-6;
        let out = fgsm_perturb(&clf, std::slice::from_ref(&s), 0.05).unwrap();
        for i in 0..3 {
            let mut xp = s.x.clone();
            xp[i] += h;
            let g = (loss(&xp) - loss(&s.x)) / h;
            assert_eq!((out[0].x[i] - s.x[i]).signum(), g.signum());
        }
    }

    #[test]
    fn fgsm_equals_worst_case() {
        let clf = LinearClassifier::new(vec![0.5, -2.0, 1e-3], -0.2).unwrap();
        let batch = vec![sample(&[1.0, 2.0, 3.0], Label::Pos), sample(&[-1.0, 0.0, 0.5], Label::Neg)];
        let budget = PerturbationBudget::new(0.25).unwrap();
        for (s, f) in batch.iter().zip(fgsm_perturb(&clf, &batch, 0.25).unwrap()) {
            assert_eq!(worst_case_perturbation(&clf, &s.x, s.y, &budget).unwrap(), f.x);
        }
    }

    #[test]
    fn mixup_batch_examples() {
        let clf = LinearClassifier::from_threshold(0.0, 2);
        let batch = vec![sample(&[1.0, 1.0], Label::Pos), sample(&[3.0, 3.0], Label::Pos)];
        let out = make_mixup_adversarial_batch(&clf, &batch, 0.0, 0.5, 1).unwrap();
        assert_eq!(out.samples, vec![sample(&[2.0, 2.0], Label::Pos)]);
        assert_eq!(out.short_classes, 0);

        let batch = vec![
            sample(&[1.0, 1.0], Label::Pos),
            sample(&[3.0, 3.0], Label::Pos),
            sample(&[-1.0, -2.0], Label::Neg),
        ];
        let out = make_mixup_adversarial_batch(&clf, &batch, 0.1, 0.5, 1).unwrap();
        assert_eq!(out.short_classes, 1);
        assert_eq!(out.samples.len(), 2);
        assert_eq!(out.samples[1].x, vec![-1.0 + 0.1, -2.0 + 0.1]);
    }

    #[test]
    fn mixup_lambda_one_is_fgsm_on_subsample() {
        let clf = LinearClassifier::new(vec![1.0, -0.5, 2.0], 0.1).unwrap();
        let p = ModelParams::symmetric(3, 1.0, 1.0, 0.5).unwrap();
        let data = sample_labeled(&p, 64, 4).unwrap();
        let out = make_mixup_adversarial_batch(&clf, &data.samples, 0.2, 1.0, 5).unwrap();
        let attacked = fgsm_perturb(&clf, &data.samples, 0.2).unwrap();
        for s in &out.samples {
            assert!(attacked.contains(s));
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { epochs: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { lambda: 1.5, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { epsilon: -0.1, ..Default::default() }.validate().is_err());
        let cfg = TrainConfig::default();
        assert_eq!(cfg.learning_rate_at(49), 1e-3);
        assert!((cfg.learning_rate_at(50) - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn diverging_run_names_epoch() {
        let p = ModelParams::symmetric(2, 1e150, 1e150, 0.5).unwrap();
        let p = ModelParams { sigma_plus: 1e150, sigma_minus: 1e150, ..p };
        let data = sample_labeled(&p, 200, 1).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            learning_rate: 1e300,
            optimizer: OptimizerKind::Sgd,
            ..Default::default()
        };
        assert_eq!(train(&data, &cfg).unwrap_err(), Error::Diverged { epoch: 1 });
    }

    #[test]
    fn stable_logistic_helpers() {
        assert!((softplus_neg(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!(softplus_neg(-1000.0).is_finite());
        assert_eq!(softplus_neg(1000.0), 0.0);
        assert!((sigmoid_neg(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(sigmoid_neg(-1000.0), 1.0);
    }
}
