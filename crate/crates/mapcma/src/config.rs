//! Run and sweep configuration files (flat TOML key/value), plus resolution
//! of partially specified settings into a validated experiment spec.
//!
//! CLI flags override file values; [`RunSettings::overlay`] implements that
//! precedence. Parse errors from the TOML layer carry line and column
//! positions.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::cma::{Radius, Variant};
use crate::error::Error as CoreError;
use crate::harness::TrialConfig;
use crate::objectives::{Function, Objective};

pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TARGET: f64 = 1e-10;
pub const DEFAULT_MAX_EVALS_FACTOR: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// The TOML error's display includes the offending line and column.
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("{0}")]
    Invalid(String),
}

impl From<CoreError> for ConfigError {
    fn from(e: CoreError) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

/// An `r` value in a config file: a bare number or one of the symbolic
/// strings `"sqrt-n"` / `"n"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RadiusValue {
    Number(f64),
    Text(String),
}

impl RadiusValue {
    pub fn to_radius(&self) -> Result<Radius, ConfigError> {
        match self {
            RadiusValue::Number(v) if *v > 0.0 && v.is_finite() => Ok(Radius::Literal(*v)),
            RadiusValue::Number(v) => {
                Err(ConfigError::Invalid(format!("r must be positive, got {v}")))
            }
            RadiusValue::Text(s) => s.parse().map_err(ConfigError::from),
        }
    }
}

/// The flat single-run config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunFile {
    pub function: Option<String>,
    pub dim: Option<usize>,
    pub variant: Option<String>,
    pub r: Option<RadiusValue>,
    pub lambda: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub target: Option<f64>,
    pub max_evals_factor: Option<u64>,
    pub h_sigma: Option<bool>,
}

pub fn load_run_file(path: &Path) -> Result<RunFile, ConfigError> {
    parse_toml(path)
}

/// A sweep file: top-level defaults plus `[[cell]]` grids. Each cell expands
/// to the cross product functions × dims × variants (× rs for variants that
/// take a momentum radius).
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SweepFile {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub target: Option<f64>,
    pub max_evals_factor: Option<u64>,
    pub h_sigma: Option<bool>,
    #[serde(default)]
    pub cell: Vec<SweepCell>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SweepCell {
    pub functions: Vec<String>,
    pub dims: Vec<usize>,
    pub variants: Vec<String>,
    pub rs: Option<Vec<RadiusValue>>,
    pub lambda: Option<usize>,
    /// Per-dimension population override, e.g. `{ 10 = 700, 20 = 1400 }`.
    pub lambda_by_dim: Option<BTreeMap<String, usize>>,
    pub trials: Option<usize>,
}

pub fn load_sweep_file(path: &Path) -> Result<SweepFile, ConfigError> {
    parse_toml(path)
}

fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    toml::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.display().to_string(),
        source: Box::new(source),
    })
}

/// Partially specified run settings; missing fields fall back to the overlay
/// base and finally to protocol defaults in [`RunSettings::resolve`].
#[derive(Debug, Clone, Default)]
pub struct RunSettings {
    pub function: Option<String>,
    pub dim: Option<usize>,
    pub variant: Option<String>,
    pub r: Option<Radius>,
    pub lambda: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub target: Option<f64>,
    pub max_evals_factor: Option<u64>,
    pub h_sigma: Option<bool>,
}

impl RunSettings {
    pub fn from_file(file: RunFile) -> Result<RunSettings, ConfigError> {
        Ok(RunSettings {
            function: file.function,
            dim: file.dim,
            variant: file.variant,
            r: file.r.as_ref().map(RadiusValue::to_radius).transpose()?,
            lambda: file.lambda,
            trials: file.trials,
            seed: file.seed,
            target: file.target,
            max_evals_factor: file.max_evals_factor,
            h_sigma: file.h_sigma,
        })
    }

    /// Field-wise precedence: values in `self` win over `base`.
    pub fn overlay(self, base: RunSettings) -> RunSettings {
        RunSettings {
            function: self.function.or(base.function),
            dim: self.dim.or(base.dim),
            variant: self.variant.or(base.variant),
            r: self.r.or(base.r),
            lambda: self.lambda.or(base.lambda),
            trials: self.trials.or(base.trials),
            seed: self.seed.or(base.seed),
            target: self.target.or(base.target),
            max_evals_factor: self.max_evals_factor.or(base.max_evals_factor),
            h_sigma: self.h_sigma.or(base.h_sigma),
        }
    }

    pub fn resolve(self) -> Result<RunSpec, ConfigError> {
        let function: Function = self
            .function
            .ok_or_else(|| ConfigError::Invalid("missing function".into()))?
            .parse()?;
        let dim = self
            .dim
            .ok_or_else(|| ConfigError::Invalid("missing dim".into()))?;
        let objective = Objective::new(function, dim)?;
        let variant: Variant = self.variant.as_deref().unwrap_or("cma-es").parse()?;
        if variant.needs_radius() && self.r.is_none() {
            return Err(ConfigError::Invalid("map-cma requires r".into()));
        }
        if !variant.needs_radius() && self.r.is_some() {
            return Err(ConfigError::Invalid(format!(
                "variant {variant} does not take r"
            )));
        }
        let trials = self.trials.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(ConfigError::Invalid("trials must be >= 1".into()));
        }
        Ok(RunSpec {
            objective,
            variant,
            radius: self.r,
            lambda: self.lambda,
            trials,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            target: self.target.unwrap_or(DEFAULT_TARGET),
            max_evals_factor: self.max_evals_factor.unwrap_or(DEFAULT_MAX_EVALS_FACTOR),
            h_sigma: self.h_sigma.unwrap_or(false),
        })
    }
}

/// A fully resolved experiment cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub objective: Objective,
    pub variant: Variant,
    pub radius: Option<Radius>,
    pub lambda: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub target: f64,
    pub max_evals_factor: u64,
    pub h_sigma: bool,
}

impl RunSpec {
    pub fn trial_config(&self) -> Result<TrialConfig, ConfigError> {
        let n = self.objective.dim();
        let r = self.radius.map(|rad| rad.resolve(n));
        let mut cfg = TrialConfig::new(self.objective, self.variant, r)?;
        if let Some(lambda) = self.lambda {
            cfg = cfg.with_lambda(lambda)?;
        }
        cfg = cfg
            .with_target(self.target)?
            .with_max_evals(self.max_evals_factor.saturating_mul(n as u64))?
            .with_h_sigma(self.h_sigma);
        Ok(cfg)
    }
}

/// Expands a sweep file into one [`RunSpec`] per (function, dim, variant, r)
/// cell, in file order.
pub fn expand_sweep(file: &SweepFile) -> Result<Vec<RunSpec>, ConfigError> {
    if file.cell.is_empty() {
        return Err(ConfigError::Invalid(
            "sweep file has no [[cell]] entries".into(),
        ));
    }
    let mut runs = Vec::new();
    for cell in &file.cell {
        let lambda_by_dim = cell
            .lambda_by_dim
            .as_ref()
            .map(|m| {
                m.iter()
                    .map(|(k, &v)| {
                        k.parse::<usize>().map(|dim| (dim, v)).map_err(|_| {
                            ConfigError::Invalid(format!(
                                "lambda-by-dim key \"{k}\" is not a dimension"
                            ))
                        })
                    })
                    .collect::<Result<BTreeMap<usize, usize>, _>>()
            })
            .transpose()?;
        let radii = cell
            .rs
            .as_ref()
            .map(|rs| {
                rs.iter()
                    .map(RadiusValue::to_radius)
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;

        for function in &cell.functions {
            for &dim in &cell.dims {
                let lambda = lambda_by_dim
                    .as_ref()
                    .and_then(|m| m.get(&dim).copied())
                    .or(cell.lambda);
                for variant in &cell.variants {
                    let parsed: Variant = variant.parse()?;
                    let cell_radii: Vec<Option<Radius>> = if parsed.needs_radius() {
                        let radii = radii.as_ref().ok_or_else(|| {
                            ConfigError::Invalid(format!(
                                "variant {parsed} in a sweep cell requires rs = [...]"
                            ))
                        })?;
                        radii.iter().map(|&r| Some(r)).collect()
                    } else {
                        vec![None]
                    };
                    for radius in cell_radii {
                        let settings = RunSettings {
                            function: Some(function.clone()),
                            dim: Some(dim),
                            variant: Some(variant.clone()),
                            r: radius,
                            lambda,
                            trials: cell.trials.or(file.trials),
                            seed: file.seed,
                            target: file.target,
                            max_evals_factor: file.max_evals_factor,
                            h_sigma: file.h_sigma,
                        };
                        runs.push(settings.resolve()?);
                    }
                }
            }
        }
    }
    Ok(runs)
}
