//! Two-class Gaussian data model and same-class mixup.
//!
//! Class `+1` is drawn with probability `alpha` from `N(mu_plus·1, sigma_plus² I)`,
//! class `-1` from `N(-mu_minus·1, sigma_minus² I)`. Mixing two samples of the
//! same class with weight `lambda` keeps the mean and scales the variance by
//! `g(lambda) = lambda² + (1 - lambda)²`.

use std::fmt;
use std::io;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, Purpose, BLOCK};

/// Relative tolerance under which two variances are treated as equal.
pub const EQUAL_VARIANCE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "+1")]
    Pos,
    #[serde(rename = "-1")]
    Neg,
}

impl Label {
    pub const BOTH: [Label; 2] = [Label::Pos, Label::Neg];

    pub fn sign(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }

    pub fn from_sign(v: f64) -> Label {
        if v >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Pos => f.write_str("+1"),
            Label::Neg => f.write_str("-1"),
        }
    }
}

/// Parameters of the class-conditional Gaussian model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub alpha: f64,
    pub d: usize,
}

impl ModelParams {
    pub fn new(
        d: usize,
        mu_plus: f64,
        mu_minus: f64,
        sigma_plus: f64,
        sigma_minus: f64,
        alpha: f64,
    ) -> Result<Self> {
        let p = ModelParams { mu_plus, mu_minus, sigma_plus, sigma_minus, alpha, d };
        p.validate()?;
        Ok(p)
    }

    /// Equal means, equal variances.
    pub fn symmetric(d: usize, mu: f64, sigma: f64, alpha: f64) -> Result<Self> {
        Self::new(d, mu, mu, sigma, sigma, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} is not finite")))
            }
        };
        finite("mu_plus", self.mu_plus)?;
        finite("mu_minus", self.mu_minus)?;
        finite("sigma_plus", self.sigma_plus)?;
        finite("sigma_minus", self.sigma_minus)?;
        finite("alpha", self.alpha)?;
        if self.sigma_plus <= 0.0 {
            return Err(Error::param("sigma_plus", "must be > 0"));
        }
        if self.sigma_minus <= 0.0 {
            return Err(Error::param("sigma_minus", "must be > 0"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha", format!("{} not in (0, 1)", self.alpha)));
        }
        if self.d == 0 {
            return Err(Error::param("d", "must be >= 1"));
        }
        if self.mu_plus + self.mu_minus <= 0.0 {
            return Err(Error::param("mu_plus + mu_minus", "classes must be separated (sum > 0)"));
        }
        Ok(())
    }

    /// Per-coordinate mean of the given class (signed).
    pub fn mean(&self, y: Label) -> f64 {
        match y {
            Label::Pos => self.mu_plus,
            Label::Neg => -self.mu_minus,
        }
    }

    pub fn sigma(&self, y: Label) -> f64 {
        match y {
            Label::Pos => self.sigma_plus,
            Label::Neg => self.sigma_minus,
        }
    }

    pub fn separation(&self) -> f64 {
        self.mu_plus + self.mu_minus
    }

    /// True when the variances agree within [`EQUAL_VARIANCE_RTOL`].
    pub fn equal_variance(&self) -> bool {
        let vp = self.sigma_plus * self.sigma_plus;
        let vm = self.sigma_minus * self.sigma_minus;
        (vm - vp).abs() < EQUAL_VARIANCE_RTOL * vp.max(vm)
    }
}

/// `lambda² + (1 - lambda)²`.
pub fn g_lambda(lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    Ok(lambda * lambda + (1.0 - lambda) * (1.0 - lambda))
}

/// Mixing coefficient; `g` is always recomputed from `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixupSpec {
    lambda: f64,
}

impl MixupSpec {
    pub fn new(lambda: f64) -> Result<Self> {
        g_lambda(lambda)?;
        Ok(MixupSpec { lambda })
    }

    /// No mixing (`g = 1`).
    pub fn plain() -> Self {
        MixupSpec { lambda: 0.0 }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn g(&self) -> f64 {
        let l = self.lambda;
        l * l + (1.0 - l) * (1.0 - l)
    }

    pub fn is_plain(&self) -> bool {
        self.g() == 1.0
    }
}

/// How mixing weights are chosen for each pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LambdaMode {
    #[default]
    Fixed,
    /// Draw a fresh `lambda ~ U(0, 1)` per pair.
    PerPairUniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<LabeledSample>,
    pub params: ModelParams,
    pub seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_count(&self, y: Label) -> usize {
        self.samples.iter().filter(|s| s.y == y).count()
    }

    /// Writes `x_0,...,x_{d-1},y` rows.
    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let d = self.params.d;
        let mut header: Vec<String> = (0..d).map(|i| format!("x_{i}")).collect();
        header.push("y".into());
        out.write_record(&header)?;
        for s in &self.samples {
            let mut rec: Vec<String> = s.x.iter().map(|v| crate::report::fmt_f64(*v)).collect();
            rec.push(s.y.as_i8().to_string());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Fill `x` with a draw from class `y` of `params` (per-coordinate `mean + sigma·z`).
pub(crate) fn draw_class<R: Rng>(rng: &mut R, params: &ModelParams, y: Label, x: &mut [f64]) {
    let m = params.mean(y);
    let s = params.sigma(y);
    for xi in x.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *xi = m + s * z;
    }
}

/// Draws `n` labelled samples, i.i.d. from the joint model.
///
/// Generation is split into blocks of [`BLOCK`] samples, each with its own
/// substream, so the output does not depend on the rayon thread count.
pub fn sample_labeled(params: &ModelParams, n: usize, seed: u64) -> Result<Dataset> {
    params.validate()?;
    if n == 0 {
        return Err(Error::param("n", "must be >= 1"));
    }
    let blocks = n.div_ceil(BLOCK);
    let samples: Vec<LabeledSample> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = substream(seed, Purpose::Dataset, b as u64);
            let count = BLOCK.min(n - b * BLOCK);
            (0..count)
                .map(|_| {
                    let u: f64 = rng.gen();
                    let y = if u < params.alpha { Label::Pos } else { Label::Neg };
                    let mut x = vec![0.0; params.d];
                    draw_class(&mut rng, params, y, &mut x);
                    LabeledSample { x, y }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(Dataset { samples, params: *params, seed })
}

/// The distribution of mixed samples: same means and prior, standard
/// deviations scaled by `sqrt(g(lambda))`.
pub fn mixup_distribution(params: &ModelParams, spec: &MixupSpec) -> Result<ModelParams> {
    params.validate()?;
    if spec.is_plain() {
        return Ok(*params);
    }
    let scale = spec.g().sqrt();
    Ok(ModelParams {
        sigma_plus: params.sigma_plus * scale,
        sigma_minus: params.sigma_minus * scale,
        ..*params
    })
}

/// Disjoint same-class pairs `(i, j)`, `i != j`, from a shuffled order of each
/// class. Returns the pairs and the classes that had fewer than two members.
pub(crate) fn same_class_pairs<R: Rng>(
    labels: impl Iterator<Item = Label>,
    rng: &mut R,
) -> (Vec<(usize, usize)>, Vec<Label>) {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, y) in labels.enumerate() {
        by_class[(y == Label::Neg) as usize].push(i);
    }
    let mut pairs = Vec::new();
    let mut short = Vec::new();
    for (slot, y) in Label::BOTH.iter().enumerate() {
        let idx = &mut by_class[slot];
        if idx.is_empty() {
            continue;
        }
        if idx.len() < 2 {
            short.push(*y);
            continue;
        }
        idx.shuffle(rng);
        pairs.extend(idx.chunks_exact(2).map(|c| (c[0], c[1])));
    }
    (pairs, short)
}

pub(crate) fn mix(a: &[f64], b: &[f64], lambda: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| lambda * u + (1.0 - lambda) * v).collect()
}

/// Same-class mixup of a dataset with a fixed `lambda`.
///
/// Each sample is used in at most one pair; a class with `n_c` members yields
/// `floor(n_c / 2)` mixed samples. Labels are carried over unchanged.
pub fn sample_mixup_pairs(data: &Dataset, spec: &MixupSpec, seed: u64) -> Result<Dataset> {
    sample_mixup_pairs_with(data, spec, LambdaMode::Fixed, seed)
}

pub fn sample_mixup_pairs_with(
    data: &Dataset,
    spec: &MixupSpec,
    mode: LambdaMode,
    seed: u64,
) -> Result<Dataset> {
    let mut rng = substream(seed, Purpose::MixupPairs, 0);
    let (pairs, short) = same_class_pairs(data.samples.iter().map(|s| s.y), &mut rng);
    if let Some(y) = short.first() {
        return Err(Error::InsufficientPairs(*y));
    }
    let samples = pairs
        .into_iter()
        .map(|(i, j)| {
            let lambda = match mode {
                LambdaMode::Fixed => spec.lambda(),
                LambdaMode::PerPairUniform => rng.gen(),
            };
            let (a, b) = (&data.samples[i], &data.samples[j]);
            LabeledSample { x: mix(&a.x, &b.x, lambda), y: a.y }
        })
        .collect();
    let params = match mode {
        LambdaMode::Fixed => mixup_distribution(&data.params, spec)?,
        LambdaMode::PerPairUniform => data.params,
    };
    Ok(Dataset { samples, params, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit(d: usize, alpha: f64) -> ModelParams {
        ModelParams::symmetric(d, 1.0, 1.0, alpha).unwrap()
    }

    #[test]
    fn g_lambda_values() {
        assert_eq!(g_lambda(0.0).unwrap(), 1.0);
        assert_eq!(g_lambda(1.0).unwrap(), 1.0);
        assert_eq!(g_lambda(0.5).unwrap(), 0.5);
        assert_relative_eq!(g_lambda(0.3).unwrap(), 0.58, epsilon = 1e-15);
        assert!(matches!(g_lambda(-0.1), Err(Error::LambdaOutOfRange(_))));
        assert!(matches!(g_lambda(1.5), Err(Error::LambdaOutOfRange(_))));
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(2, 1.0, 1.0, 0.0, 1.0, 0.5).is_err());
        assert!(ModelParams::new(2, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(0, 1.0, 1.0, 1.0, 1.0, 0.5).is_err());
        assert!(ModelParams::new(2, 1.0, -1.0, 1.0, 1.0, 0.5).is_err());
        assert!(ModelParams::new(2, f64::NAN, 1.0, 1.0, 1.0, 0.5).is_err());
        assert!(ModelParams::new(2, 1.0, -0.5, 1.0, 1.0, 0.5).is_ok());
    }

    #[test]
    fn mixup_distribution_examples() {
        let p = unit(3, 0.5);
        assert_eq!(mixup_distribution(&p, &MixupSpec::new(0.0).unwrap()).unwrap(), p);
        let half = mixup_distribution(&p, &MixupSpec::new(0.5).unwrap()).unwrap();
        assert_relative_eq!(half.sigma_plus, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(half.sigma_minus, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        let q = ModelParams::new(3, 1.0, 1.0, 2.0, 1.0, 0.5).unwrap();
        let m = mixup_distribution(&q, &MixupSpec::new(0.3).unwrap()).unwrap();
        assert_relative_eq!(m.sigma_plus, 1.52315, epsilon = 1e-5);
        assert_eq!((m.mu_plus, m.mu_minus, m.alpha), (q.mu_plus, q.mu_minus, q.alpha));
    }

    #[test]
    fn sampler_class_fraction() {
        let p = ModelParams::symmetric(2, 1.0, 1.0, 0.5).unwrap();
        let data = sample_labeled(&p, 1_000_000, 7).unwrap();
        let frac = data.class_count(Label::Pos) as f64 / data.len() as f64;
        assert!((frac - 0.5).abs() < 0.002, "{frac}");
    }

    #[test]
    fn sampler_degenerate_prior() {
        let p = ModelParams::symmetric(2, 1.0, 1.0, 1.0 - 1e-9).unwrap();
        let data = sample_labeled(&p, 5000, 1).unwrap();
        assert!(data.samples.iter().all(|s| s.y == Label::Pos));
    }

    #[test]
    fn sampler_is_deterministic() {
        let p = unit(3, 0.4);
        let a = sample_labeled(&p, 10_000, 99).unwrap();
        let b = sample_labeled(&p, 10_000, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_labeled(&p, 10_000, 100).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn sampler_independent_of_thread_count() {
        let p = unit(2, 0.6);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample_labeled(&p, 3 * BLOCK + 17, 5).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn sampler_rejects_bad_input() {
        let p = unit(2, 0.5);
        assert!(sample_labeled(&p, 0, 1).is_err());
        let bad = ModelParams { sigma_plus: -1.0, ..p };
        assert!(sample_labeled(&bad, 10, 1).is_err());
    }

    #[test]
    fn mixup_midpoint_and_identity() {
        let p = unit(2, 0.5);
        let data = Dataset {
            samples: vec![
                LabeledSample { x: vec![1.0, 1.0], y: Label::Pos },
                LabeledSample { x: vec![3.0, 3.0], y: Label::Pos },
            ],
            params: p,
            seed: 0,
        };
        let mixed = sample_mixup_pairs(&data, &MixupSpec::new(0.5).unwrap(), 3).unwrap();
        assert_eq!(mixed.samples, vec![LabeledSample { x: vec![2.0, 2.0], y: Label::Pos }]);

        let data = sample_labeled(&p, 501, 11).unwrap();
        let ident = sample_mixup_pairs(&data, &MixupSpec::new(1.0).unwrap(), 4).unwrap();
        for s in &ident.samples {
            assert!(data.samples.iter().any(|o| o == s));
        }
        let cap = data.class_count(Label::Pos) / 2 + data.class_count(Label::Neg) / 2;
        assert_eq!(ident.len(), cap);
    }

    #[test]
    fn mixup_needs_two_per_class() {
        let p = unit(1, 0.5);
        let data = Dataset {
            samples: vec![
                LabeledSample { x: vec![1.0], y: Label::Pos },
                LabeledSample { x: vec![2.0], y: Label::Pos },
                LabeledSample { x: vec![-1.0], y: Label::Neg },
            ],
            params: p,
            seed: 0,
        };
        let err = sample_mixup_pairs(&data, &MixupSpec::new(0.5).unwrap(), 0).unwrap_err();
        assert_eq!(err, Error::InsufficientPairs(Label::Neg));
        assert!(err.to_string().contains("-1"));
    }

    #[test]
    fn mixup_variance_matches_g() {
        // Class +1 only, sigma = 1, lambda = 0.5: per-coordinate variance 0.5.
        let p = ModelParams::symmetric(1, 1.0, 1.0, 1.0 - 1e-12).unwrap();
        let p = ModelParams { mu_plus: 0.0, mu_minus: 1.0, ..p };
        let data = sample_labeled(&p, 2_000_000, 21).unwrap();
        let mixed = sample_mixup_pairs(&data, &MixupSpec::new(0.5).unwrap(), 22).unwrap();
        let n = mixed.len() as f64;
        let mean = mixed.samples.iter().map(|s| s.x[0]).sum::<f64>() / n;
        let var = mixed.samples.iter().map(|s| (s.x[0] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(n >= 999_000.0);
        assert!((var - 0.5).abs() < 0.005, "{var}");
    }

    #[test]
    fn per_pair_uniform_mode_keeps_labels() {
        let p = unit(2, 0.5);
        let data = sample_labeled(&p, 1000, 2).unwrap();
        let spec = MixupSpec::plain();
        let a = sample_mixup_pairs_with(&data, &spec, LambdaMode::PerPairUniform, 8).unwrap();
        let b = sample_mixup_pairs_with(&data, &spec, LambdaMode::PerPairUniform, 8).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.params, data.params);
        assert_eq!(a.class_count(Label::Pos), data.class_count(Label::Pos) / 2);
        assert_eq!(a.class_count(Label::Neg), data.class_count(Label::Neg) / 2);
    }

    #[test]
    fn csv_export_header() {
        let p = unit(3, 0.5);
        let data = sample_labeled(&p, 4, 1).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x_0,x_1,x_2,y\n"));
        assert_eq!(text.lines().count(), 5);
    }

    proptest! {
        #[test]
        fn g_is_bounded_symmetric_and_minimal_at_half(l in 0.0f64..=1.0) {
            let g = g_lambda(l).unwrap();
            prop_assert!((0.5..=1.0).contains(&g));
            prop_assert!((g - g_lambda(1.0 - l).unwrap()).abs() < 1e-15);
            prop_assert!(g >= g_lambda(0.5).unwrap());
        }

        #[test]
        fn mixup_keeps_means(l in 0.0f64..=1.0, mp in 0.1f64..3.0, mm in 0.1f64..3.0) {
            let p = ModelParams::new(4, mp, mm, 1.3, 0.7, 0.4).unwrap();
            let q = mixup_distribution(&p, &MixupSpec::new(l).unwrap()).unwrap();
            prop_assert_eq!(q.mu_plus, p.mu_plus);
            prop_assert_eq!(q.mu_minus, p.mu_minus);
            prop_assert_eq!(q.alpha, p.alpha);
        }

        #[test]
        fn mixed_labels_are_pair_labels(seed in 0u64..1000, l in 0.0f64..=1.0) {
            let p = ModelParams::symmetric(2, 1.0, 1.0, 0.5).unwrap();
            let data = sample_labeled(&p, 64, seed).unwrap();
            let mut rng = substream(seed, Purpose::MixupPairs, 0);
            let (pairs, _) = same_class_pairs(data.samples.iter().map(|s| s.y), &mut rng);
            for (i, j) in pairs {
                prop_assert_ne!(i, j);
                prop_assert_eq!(data.samples[i].y, data.samples[j].y);
            }
            if data.class_count(Label::Pos) >= 2 && data.class_count(Label::Neg) >= 2 {
                let mixed = sample_mixup_pairs(&data, &MixupSpec::new(l).unwrap(), seed).unwrap();
                prop_assert_eq!(mixed.class_count(Label::Pos), data.class_count(Label::Pos) / 2);
                prop_assert_eq!(mixed.class_count(Label::Neg), data.class_count(Label::Neg) / 2);
            }
        }
    }
}
