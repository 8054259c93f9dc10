//! Class-wise natural and adversarial risk of linear classifiers on
//! class-conditional Gaussian data, with and without same-class mixup.
//!
//! The crate is organised around the pieces needed to state, check and
//! demonstrate the disparity-reduction results:
//!
//! * [`model`]: the two-class Gaussian data model, the mixup transform and
//!   seeded samplers.
//! * [`analytic`]: closed-form class-wise risks, optimal thresholds and the
//!   ordering bounds.
//! * [`classifier`]: uniform-weight linear classifiers, the exact
//!   worst-case ℓ∞ adversary and empirical class-wise risk.
//! * [`monte_carlo`]: Monte Carlo estimates with binomial standard errors
//!   and grid validation of the closed forms.
//! * [`trainer`]: logistic-regression training under natural, FGSM
//!   adversarial and mixup-adversarial regimes.

pub mod analytic;
pub mod classifier;
pub mod error;
pub mod minimize;
pub mod model;
pub mod monte_carlo;
pub mod normal;
pub mod report;
pub mod rng;
pub mod trainer;

pub use analytic::{
    adversarial_threshold, bias_constant_k, classwise_adversarial_risk, classwise_natural_risk,
    classwise_risk, classwise_risk_at, disparity, natural_threshold, ordering_bounds, overall_risk,
    threshold_roots, AnalyticConstants, Attack, Mixing, PerturbationBudget, Regime, RiskPair,
};
pub use classifier::{
    empirical_classwise_risk, fit_threshold_numeric, worst_case_perturbation, LinearClassifier,
};
pub use error::{Error, Result};
pub use model::{
    g_lambda, mixup_distribution, sample_labeled, sample_mixup_pairs, Dataset, Label, LabeledSample,
    LambdaMode, MixupSpec, ModelParams,
};
pub use monte_carlo::{
    default_grid, estimate_classwise_risk, validate_formula, RiskEstimate, ValidationOutcome,
    ValidationPoint, ValidationReport,
};
pub use normal::std_normal_cdf;
pub use trainer::{
    fgsm_perturb, holdout_split, make_mixup_adversarial_batch, train, MixupBatch, OptimizerKind, TrainConfig,
    TrainRegime, TrainReport,
};
