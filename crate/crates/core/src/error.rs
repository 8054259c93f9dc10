use thiserror::Error;

use crate::model::Label;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("lambda = {0} lies outside [0, 1]")]
    LambdaOutOfRange(f64),

    #[error("non-finite argument {0} to the normal cdf")]
    NonFinite(f64),

    #[error(
        "perturbation exceeds class separation: 2*epsilon = {two_eps} >= mu_plus + mu_minus = {separation}"
    )]
    SeparationExceeded { two_eps: f64, separation: f64 },

    #[error("threshold equation has no real root (radicand {0} < 0)")]
    NoRealRoot(f64),

    #[error("ordering bound undefined: bias constant K is zero, all disparities vanish")]
    ZeroBiasConstant,

    #[error("ordering bounds are only defined for sigma_plus == sigma_minus")]
    UnequalVariance,

    #[error("class {0} has fewer than two samples, cannot form same-class pairs")]
    InsufficientPairs(Label),

    #[error("class {0} has no samples")]
    MissingClass(Label),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sample count {got} below the minimum of {min}")]
    TooFewSamples { got: usize, min: usize },

    #[error("numeric minimizer bracket [{lo}, {hi}] does not contain a sign change of the risk derivative")]
    BracketFailed { lo: f64, hi: f64 },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },
}

impl Error {
    /// Short machine-readable tag used for erroring rows in CSV output.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidParam { .. } => "invalid_param",
            Error::LambdaOutOfRange(_) => "lambda_out_of_range",
            Error::NonFinite(_) => "non_finite",
            Error::SeparationExceeded { .. } => "separation_exceeded",
            Error::NoRealRoot(_) => "no_real_root",
            Error::ZeroBiasConstant => "zero_bias_constant",
            Error::UnequalVariance => "unequal_variance",
            Error::InsufficientPairs(_) => "insufficient_pairs",
            Error::MissingClass(_) => "missing_class",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::TooFewSamples { .. } => "too_few_samples",
            Error::BracketFailed { .. } => "bracket_failed",
            Error::Diverged { .. } => "diverged",
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam { name, reason: reason.into() }
    }
}
