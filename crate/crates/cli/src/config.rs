//! JSON run configuration. Every config type uses flat keys, rejects unknown
//! ones, and falls back to defaults for missing ones. A run manifest is also
//! accepted wherever a config is, so `--config out.csv.manifest.json`
//! re-runs a previous invocation.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use fairmix_core::{OptimizerKind, Regime, TrainRegime};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Reads `path` as either a config document or a manifest of `command`.
pub fn load<T: DeserializeOwned>(path: &Path, command: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, command)
}

pub fn parse<T: DeserializeOwned>(text: &str, command: &str) -> Result<T, CliError> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
    if value.get("tool_version").is_some() {
        let recorded = value.get("command").and_then(|c| c.as_str()).unwrap_or_default();
        if recorded != command {
            return Err(CliError::Config(format!("manifest was written by `{recorded}`, not `{command}`")));
        }
        value = value["config"].take();
    }
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            CliError::Config(e.into_inner().to_string())
        } else {
            CliError::Config(format!("key `{path}`: {}", e.into_inner()))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticConfig {
    pub d: usize,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub alpha: f64,
    pub lambdas: Vec<f64>,
    pub epsilon: Option<f64>,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        AnalyticConfig {
            d: 5,
            mu_plus: 1.0,
            mu_minus: 1.0,
            sigma_plus: 1.0,
            sigma_minus: 1.0,
            alpha: 0.6,
            lambdas: vec![0.0, 0.5],
            epsilon: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Axis {
    /// Sets both class means to the swept value.
    ClassDistance,
    Epsilon,
    Dimension,
    Lambda,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::ClassDistance => "class_distance",
            Axis::Epsilon => "epsilon",
            Axis::Dimension => "dimension",
            Axis::Lambda => "lambda",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: Axis,
    pub grid: Vec<f64>,
    #[serde(default = "d_default")]
    pub d: usize,
    #[serde(default = "one")]
    pub mu_plus: f64,
    #[serde(default = "one")]
    pub mu_minus: f64,
    #[serde(default = "one")]
    pub sigma_plus: f64,
    #[serde(default = "one")]
    pub sigma_minus: f64,
    #[serde(default = "alpha_default")]
    pub alpha: f64,
    /// Mixing weight used by the `*_mixup` regimes.
    #[serde(default = "half")]
    pub lambda: f64,
    /// Budget used by the `adversarial_*` regimes.
    #[serde(default = "eps_default")]
    pub epsilon: f64,
    #[serde(default = "all_regimes")]
    pub regimes: Vec<Regime>,
    /// Monte Carlo samples per class and row; 0 for closed form only.
    #[serde(default)]
    pub mc_n: usize,
    #[serde(default = "multiplier_default")]
    pub mc_multiplier: f64,
    #[serde(default)]
    pub seed: u64,
}

fn d_default() -> usize {
    5
}
fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn alpha_default() -> f64 {
    0.6
}
fn eps_default() -> f64 {
    0.1
}
fn multiplier_default() -> f64 {
    4.0
}
fn all_regimes() -> Vec<Regime> {
    Regime::ALL.to_vec()
}

impl SweepConfig {
    /// The figure sweeps: class distance, budget, dimension and mixing weight.
    pub fn preset(axis: Axis) -> Self {
        let steps = |lo: f64, step: f64, n: usize| (0..n).map(|i| lo + step * i as f64).collect();
        let base = SweepConfig {
            axis,
            grid: Vec::new(),
            d: 5,
            mu_plus: 1.0,
            mu_minus: 1.0,
            sigma_plus: 1.0,
            sigma_minus: 1.0,
            alpha: 0.6,
            lambda: 0.5,
            epsilon: 0.1,
            regimes: all_regimes(),
            mc_n: 0,
            mc_multiplier: 4.0,
            seed: 0,
        };
        match axis {
            Axis::ClassDistance => SweepConfig { grid: steps(0.5, 0.25, 7), ..base },
            Axis::Epsilon => SweepConfig { grid: steps(0.0, 0.05, 9), ..base },
            Axis::Dimension => SweepConfig {
                grid: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
                mu_plus: 0.5,
                mu_minus: 0.5,
                ..base
            },
            Axis::Lambda => SweepConfig { grid: steps(0.0, 0.1, 11), ..base },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    /// CSV grid file; the built-in 20-point grid when absent.
    pub grid: Option<PathBuf>,
    pub n: usize,
    pub multiplier: f64,
    pub seed: u64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig { grid: None, n: 1_000_000, multiplier: 4.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRunConfig {
    pub d: usize,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub alpha: f64,
    /// Samples per dataset, before the 80/20 split.
    pub n: usize,
    /// Runs use seeds `seed, seed + 1, …, seed + seeds - 1`, each seeding
    /// both its dataset and its training.
    pub seeds: u64,
    pub seed: u64,
    pub regimes: Vec<TrainRegime>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lr_decay_factor: f64,
    pub lr_decay_every: usize,
    pub epsilon: f64,
    pub lambda: f64,
    pub optimizer: OptimizerKind,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        let t = fairmix_core::TrainConfig::default();
        TrainRunConfig {
            d: 10,
            mu_plus: 1.0,
            mu_minus: 1.0,
            sigma_plus: 1.0,
            sigma_minus: 1.0,
            alpha: 0.7,
            n: 20_000,
            seeds: 10,
            seed: 0,
            regimes: vec![TrainRegime::Adversarial, TrainRegime::MixupAdversarial],
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            lr_decay_factor: t.lr_decay_factor,
            lr_decay_every: t.lr_decay_every,
            epsilon: 0.3,
            lambda: t.lambda,
            optimizer: t.optimizer,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let err = parse::<AnalyticConfig>(r#"{"d": 3, "alhpa": 0.5}"#, "analytic").unwrap_err();
        assert!(err.to_string().contains("alhpa"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn wrong_type_names_the_key() {
        let err =
            parse::<SweepConfig>(r#"{"axis": "epsilon", "grid": [0.1], "d": "five"}"#, "sweep").unwrap_err();
        assert!(err.to_string().contains("key `d`"), "{err}");
        let err = parse::<SweepConfig>(r#"{"axis": "epsilon", "grid": [0.1], "regimes": ["both"]}"#, "sweep")
            .unwrap_err();
        assert!(err.to_string().contains("regimes[0]"), "{err}");
    }

    #[test]
    fn defaults_fill_missing_keys() {
        let c: TrainRunConfig = parse(r#"{"seeds": 2}"#, "train").unwrap();
        assert_eq!(c, TrainRunConfig { seeds: 2, ..Default::default() });
    }

    #[test]
    fn manifest_is_accepted_for_its_own_command() {
        let m = r#"{"tool_version": "0.1.0", "command": "analytic", "config": {"d": 2}}"#;
        let c: AnalyticConfig = parse(m, "analytic").unwrap();
        assert_eq!(c.d, 2);
        assert!(parse::<AnalyticConfig>(m, "sweep").is_err());
    }

    #[test]
    fn presets_roundtrip_through_json() {
        for axis in [Axis::ClassDistance, Axis::Epsilon, Axis::Dimension, Axis::Lambda] {
            let c = SweepConfig::preset(axis);
            let back: SweepConfig = parse(&serde_json::to_string(&c).unwrap(), "sweep").unwrap();
            assert_eq!(back, c);
        }
    }
}
