//! JSON schemas for model and experiment files.
//!
//! A model file describes the moving-average coefficients, shock block,
//! and instrument designs; an experiment file embeds a model and adds the
//! Monte Carlo settings.  Parsing validates shapes here and defers the
//! structural checks (normalizations, variances) to the core
//! constructors.

use serde::{Deserialize, Serialize};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimation::ControlSpec;
use crate::svma::{
    AugmentedSvmaModel, InstrumentKind, InstrumentSpec, LagPolynomial, Model, ShockDistribution,
    SupportPoint, SvmaModel,
};
use crate::verify::{Experiment, Target, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Baseline,
    Augmented,
}

/// Distribution of one shock: the string `"gaussian"` or
/// `{"discrete": [[value, mass], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistributionConfig {
    Named(String),
    Discrete { discrete: Vec<(f64, f64)> },
}

/// Either one string for every shock or a per-shock list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistributionsConfig {
    Uniform(String),
    PerShock(Vec<DistributionConfig>),
}

impl Default for DistributionsConfig {
    fn default() -> Self {
        DistributionsConfig::Uniform("gaussian".into())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentKindConfig {
    Continuous,
    Binary { p_z: f64 },
}

impl Default for InstrumentKindConfig {
    fn default() -> Self {
        InstrumentKindConfig::Continuous
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentConfig {
    pub loadings: Vec<f64>,
    #[serde(default)]
    pub noise_variance: f64,
    #[serde(default)]
    pub kind: InstrumentKindConfig,
}

/// Model file.  `coeffs[h][row][shock]` holds the horizon-`h` response of
/// each observable row; rows are `(x, ..., y)` for a baseline model and
/// `(x_1, ..., x_S, ..., y)` for an augmented one.  `composite_count` is
/// the number of composite shocks, which for an augmented model equals
/// the number of sectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(alias = "sector_count")]
    pub composite_count: usize,
    pub coeffs: Vec<Vec<Vec<f64>>>,
    pub shock_variances: Vec<f64>,
    #[serde(default)]
    pub distributions: DistributionsConfig,
    pub instruments: Vec<InstrumentConfig>,
    /// Optional shape assertions, checked against `coeffs` when present.
    #[serde(default)]
    pub rows: Option<usize>,
    #[serde(default)]
    pub shocks: Option<usize>,
}

fn schema_err(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn build_polynomial(coeffs: &[Vec<Vec<f64>>]) -> Result<LagPolynomial> {
    if coeffs.is_empty() {
        return Err(schema_err("coeffs must contain at least the impact matrix"));
    }
    let rows = coeffs[0].len();
    let cols = coeffs[0].first().map_or(0, |r| r.len());
    let mut out = Vec::with_capacity(coeffs.len());
    for (h, mat) in coeffs.iter().enumerate() {
        if mat.len() != rows {
            return Err(schema_err(format!(
                "coeffs[{h}] has {} rows, expected {rows}",
                mat.len()
            )));
        }
        let mut flat = Vec::with_capacity(rows * cols);
        for (r, row) in mat.iter().enumerate() {
            if row.len() != cols {
                return Err(schema_err(format!(
                    "coeffs[{h}] row {r} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        out.push(DMatrix::from_row_slice(rows, cols, &flat));
    }
    LagPolynomial::new(out)
}

fn build_distributions(cfg: &DistributionsConfig, m: usize) -> Result<Vec<ShockDistribution>> {
    let one = |c: &DistributionConfig, s: usize| -> Result<ShockDistribution> {
        match c {
            DistributionConfig::Named(name) if name == "gaussian" => {
                Ok(ShockDistribution::Gaussian)
            }
            DistributionConfig::Named(name) => Err(schema_err(format!(
                "unknown distribution {name:?} for shock {s}; use \"gaussian\" or {{\"discrete\": ...}}"
            ))),
            DistributionConfig::Discrete { discrete } => Ok(ShockDistribution::Discrete(
                discrete
                    .iter()
                    .map(|&(value, mass)| SupportPoint { value, mass })
                    .collect(),
            )),
        }
    };
    match cfg {
        DistributionsConfig::Uniform(name) if name == "gaussian" => {
            Ok(vec![ShockDistribution::Gaussian; m])
        }
        DistributionsConfig::Uniform(name) => Err(schema_err(format!(
            "unknown distribution {name:?}; use \"gaussian\" or a per-shock list"
        ))),
        DistributionsConfig::PerShock(list) => {
            if list.len() != m {
                return Err(schema_err(format!(
                    "{} distributions for {m} shocks",
                    list.len()
                )));
            }
            list.iter()
                .enumerate()
                .map(|(s, c)| one(c, s))
                .collect()
        }
    }
}

fn build_instruments(cfgs: &[InstrumentConfig]) -> Vec<InstrumentSpec> {
    cfgs.iter()
        .map(|c| InstrumentSpec {
            loadings: c.loadings.clone(),
            noise_variance: c.noise_variance,
            kind: match c.kind {
                InstrumentKindConfig::Continuous => InstrumentKind::Continuous,
                InstrumentKindConfig::Binary { p_z } => InstrumentKind::Binary { p_z },
            },
        })
        .collect()
}

impl ModelConfig {
    pub fn build(&self) -> Result<(Model, Vec<InstrumentSpec>)> {
        let poly = build_polynomial(&self.coeffs)?;
        if let Some(rows) = self.rows {
            if rows != poly.n_rows() {
                return Err(schema_err(format!(
                    "rows field says {rows}, coeffs have {}",
                    poly.n_rows()
                )));
            }
        }
        if let Some(shocks) = self.shocks {
            if shocks != poly.n_shocks() {
                return Err(schema_err(format!(
                    "shocks field says {shocks}, coeffs have {}",
                    poly.n_shocks()
                )));
            }
        }
        let distributions = build_distributions(&self.distributions, poly.n_shocks())?;
        let instruments = build_instruments(&self.instruments);
        for (j, spec) in instruments.iter().enumerate() {
            spec.validate(poly.n_shocks())
                .map_err(|e| schema_err(format!("instrument {j}: {e}")))?;
        }
        let model = match self.kind {
            ModelKind::Baseline => Model::Baseline(SvmaModel::new(
                poly,
                self.shock_variances.clone(),
                distributions,
                self.composite_count,
            )?),
            ModelKind::Augmented => Model::Augmented(AugmentedSvmaModel::new(
                poly,
                self.shock_variances.clone(),
                distributions,
                self.composite_count,
            )?),
        };
        Ok((model, instruments))
    }
}

/// Parses a model file.
pub fn parse_model(json: &str) -> Result<(Model, Vec<InstrumentSpec>)> {
    let cfg: ModelConfig = serde_json::from_str(json).map_err(|e| schema_err(e.to_string()))?;
    cfg.build()
}

fn default_true() -> bool {
    true
}

fn default_lag_order() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlsConfig {
    #[serde(default = "default_lag_order")]
    pub lag_order: usize,
    #[serde(default = "default_true")]
    pub include_y_lags: bool,
    #[serde(default = "default_true")]
    pub include_x_lags: bool,
    #[serde(default = "default_true")]
    pub include_instrument_lags: bool,
    #[serde(default)]
    pub include_sector_lags: bool,
}

impl Default for ControlsConfig {
    fn default() -> Self {
        Self {
            lag_order: default_lag_order(),
            include_y_lags: true,
            include_x_lags: true,
            include_instrument_lags: true,
            include_sector_lags: false,
        }
    }
}

impl ControlsConfig {
    pub fn to_spec(&self) -> ControlSpec {
        ControlSpec {
            lag_order: self.lag_order,
            include_y_lags: self.include_y_lags,
            include_x_lags: self.include_x_lags,
            include_instrument_lags: self.include_instrument_lags,
            include_sector_lags: self.include_sector_lags,
        }
    }
}

fn default_se_multiple() -> f64 {
    3.0
}

fn default_min_coverage() -> f64 {
    0.90
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    #[serde(default = "default_se_multiple")]
    pub se_multiple: f64,
    #[serde(default = "default_min_coverage")]
    pub min_coverage: f64,
    #[serde(default)]
    pub rejection_band: Option<(f64, f64)>,
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        Self {
            se_multiple: default_se_multiple(),
            min_coverage: default_min_coverage(),
            rejection_band: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetConfig {
    AggregateIrf,
    AggregateCumulative,
    SectoralIrf,
    SectoralCumulative,
    NoIntersectoralTest,
}

fn default_level() -> f64 {
    0.05
}

fn default_replications() -> usize {
    200
}

/// Experiment file: a model plus Monte Carlo settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(alias = "T")]
    pub t_len: usize,
    pub horizons: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    pub base_seed: u64,
    pub target: TargetConfig,
    /// Instrument index for the aggregate targets.
    #[serde(default)]
    pub instrument: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub controls: ControlsConfig,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
}

impl ExperimentConfig {
    pub fn build(&self) -> Result<Experiment> {
        let (model, instruments) = self.model.build()?;
        let target = match self.target {
            TargetConfig::AggregateIrf => Target::AggregateIrf {
                instrument: self.instrument,
            },
            TargetConfig::AggregateCumulative => Target::AggregateCumulative {
                instrument: self.instrument,
            },
            TargetConfig::SectoralIrf => Target::SectoralIrf,
            TargetConfig::SectoralCumulative => Target::SectoralCumulative,
            TargetConfig::NoIntersectoralTest => Target::NoIntersectoralTest,
        };
        Ok(Experiment {
            model,
            instruments,
            t_len: self.t_len,
            horizons: self.horizons.clone(),
            replications: self.replications,
            base_seed: self.base_seed,
            target,
            controls: self.controls.to_spec(),
            tolerances: Tolerances {
                se_multiple: self.tolerances.se_multiple,
                min_coverage: self.tolerances.min_coverage,
                rejection_band: self.tolerances.rejection_band,
            },
            level: self.level,
        })
    }
}

/// Parses an experiment file.
pub fn parse_experiment(json: &str) -> Result<Experiment> {
    let cfg: ExperimentConfig =
        serde_json::from_str(json).map_err(|e| schema_err(e.to_string()))?;
    cfg.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline_json() -> String {
        r#"{
            "kind": "baseline",
            "composite_count": 2,
            "coeffs": [
                [[1.0, 1.0, 0.0], [0.4, 1.1, 0.6]],
                [[0.5, 0.2, 0.1], [0.3, 0.5, 0.2]]
            ],
            "shock_variances": [1.0, 0.7, 0.9],
            "instruments": [
                {"loadings": [1.0, 0.5, 0.0], "noise_variance": 0.3}
            ]
        }"#
        .to_string()
    }

    #[test]
    fn baseline_model_parses_with_defaults() {
        let (model, instruments) = parse_model(&baseline_json()).unwrap();
        let Model::Baseline(m) = model else {
            panic!("expected a baseline model")
        };
        assert_eq!(m.n_shocks(), 3);
        assert_eq!(m.composite_count(), 2);
        assert_eq!(m.h_max(), 1);
        assert_eq!(instruments.len(), 1);
        assert!(matches!(instruments[0].kind, InstrumentKind::Continuous));
    }

    #[test]
    fn augmented_model_with_discrete_shocks_and_binary_instrument() {
        let json = r#"{
            "kind": "augmented",
            "sector_count": 2,
            "coeffs": [
                [[1.0, 0.0, 0.2], [0.0, 1.0, 0.5], [0.6, 0.9, 1.0]],
                [[0.4, 0.1, 0.1], [0.1, 0.5, 0.2], [0.2, 0.3, 0.4]]
            ],
            "shock_variances": [1.0, 1.0, 0.7],
            "distributions": [
                {"discrete": [[-1.0, 0.5], [1.0, 0.5]]},
                "gaussian",
                "gaussian"
            ],
            "instruments": [
                {"loadings": [1.0, 0.3, 0.0], "noise_variance": 0.2,
                 "kind": {"binary": {"p_z": 0.1}}}
            ]
        }"#;
        let (model, instruments) = parse_model(json).unwrap();
        let Model::Augmented(a) = model else {
            panic!("expected an augmented model")
        };
        assert_eq!(a.sector_count(), 2);
        assert!(matches!(
            a.distributions()[0],
            ShockDistribution::Discrete(_)
        ));
        assert!(matches!(
            instruments[0].kind,
            InstrumentKind::Binary { p_z } if (p_z - 0.1).abs() < 1e-15
        ));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let json = baseline_json().replace("\"kind\"", "\"typo_field\": 1, \"kind\"");
        assert!(matches!(parse_model(&json), Err(Error::Schema(_))));
    }

    #[test]
    fn ragged_coefficients_are_rejected() {
        let json = r#"{
            "kind": "baseline",
            "composite_count": 1,
            "coeffs": [[[1.0, 0.0], [0.4]]],
            "shock_variances": [1.0, 1.0],
            "instruments": [{"loadings": [1.0, 0.0]}]
        }"#;
        match parse_model(json) {
            Err(Error::Schema(msg)) => assert!(msg.contains("row 1"), "{msg}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn shape_assertions_are_checked() {
        let json = baseline_json().replace("\"kind\"", "\"rows\": 5, \"kind\"");
        assert!(matches!(parse_model(&json), Err(Error::Schema(_))));
    }

    #[test]
    fn structural_violations_surface_as_core_errors() {
        // Impact of the first composite shock is not one.
        let json = baseline_json().replace("[[1.0, 1.0, 0.0]", "[[2.0, 1.0, 0.0]");
        assert!(matches!(
            parse_model(&json),
            Err(Error::NormalizationViolation { shock: 0, .. })
        ));
    }

    #[test]
    fn experiment_parses_with_defaults() {
        let json = format!(
            r#"{{
                "model": {},
                "t_len": 500,
                "horizons": [0, 2, 4],
                "base_seed": 11,
                "target": "aggregate-irf"
            }}"#,
            baseline_json()
        );
        let e = parse_experiment(&json).unwrap();
        assert_eq!(e.t_len, 500);
        assert_eq!(e.replications, 200);
        assert_eq!(e.target, Target::AggregateIrf { instrument: 0 });
        assert_eq!(e.controls.lag_order, 4);
        assert!(e.controls.include_y_lags);
        assert!(!e.controls.include_sector_lags);
        assert_eq!(e.tolerances.se_multiple, 3.0);
        assert_eq!(e.tolerances.min_coverage, 0.90);
        assert_eq!(e.level, 0.05);
    }

    #[test]
    fn experiment_accepts_test_target_and_band() {
        let json = format!(
            r#"{{
                "model": {},
                "T": 1000,
                "horizons": [0],
                "replications": 500,
                "base_seed": 3,
                "target": "no-intersectoral-test",
                "level": 0.05,
                "tolerances": {{"rejection_band": [0.02, 0.10]}}
            }}"#,
            baseline_json()
        );
        let e = parse_experiment(&json).unwrap();
        assert_eq!(e.target, Target::NoIntersectoralTest);
        assert_eq!(e.tolerances.rejection_band, Some((0.02, 0.10)));
        assert_eq!(e.tolerances.se_multiple, 3.0);
    }

    #[test]
    fn bad_distribution_names_are_rejected() {
        let json = baseline_json().replace(
            "\"instruments\"",
            "\"distributions\": \"cauchy\", \"instruments\"",
        );
        match parse_model(&json) {
            Err(Error::Schema(msg)) => assert!(msg.contains("cauchy"), "{msg}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }
}
