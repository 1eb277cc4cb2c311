//! Versioned run configuration. Every field is validated before any
//! computation and unknown keys are rejected.

use std::path::{Path, PathBuf};

use nnloc::estimators::{EstimatorKind, EstimatorSpec};
use nnloc::loss::Loss;
use nnloc::model::{ModelDensity, ProblemSetup};
use nnloc::numerics::quadrature::QuadratureSpec;
use nnloc::numerics::{linear_grid, log_grid};
use nnloc::suite::SuiteOptions;
use nnloc::{Error, Result};
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Grid {
    Linear { start: f64, end: f64, points: usize },
    Log { start: f64, end: f64, points: usize },
    Values(Vec<f64>),
}

impl Grid {
    pub fn points(&self, name: &str) -> Result<Vec<f64>> {
        let v = match self {
            Grid::Linear { start, end, points } => {
                check_span(name, *start, *end, *points)?;
                linear_grid(*start, *end, *points)
            }
            Grid::Log { start, end, points } => {
                check_span(name, *start, *end, *points)?;
                if !(*start > 0.0) {
                    return Err(invalid(format!("{name}: a log grid needs a positive start")));
                }
                log_grid(*start, *end, *points)
            }
            Grid::Values(v) => v.clone(),
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid(format!("{name}: values must be finite and strictly increasing")));
        }
        Ok(v)
    }
}

fn check_span(name: &str, start: f64, end: f64, points: usize) -> Result<()> {
    if points == 0 || !start.is_finite() || !end.is_finite() || (points > 1 && !(end > start)) {
        return Err(invalid(format!("{name}: need end > start and at least one point")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskChoice {
    /// Monte Carlo for losses with a singular derivative, else quadrature.
    #[default]
    Auto,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance of the two-dimensional quadratures; the library
    /// defaults apply when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel: Option<f64>,
    pub mc_reps: usize,
    /// Monte Carlo error band in standard errors.
    pub mc_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel: None,
            mc_reps: 100_000,
            mc_band: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default = "default_model")]
    pub model: ModelDensity,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_loss")]
    pub loss: Loss,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: Grid,
    #[serde(default = "default_y_grid")]
    pub y_grid: Grid,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub risk_method: RiskChoice,
    #[serde(default)]
    pub output: Output,
    /// Raw observations for `estimate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<Vec<f64>>,
    /// Criterion filter for `suite`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

fn default_model() -> ModelDensity {
    ModelDensity::Normal
}

fn default_n() -> usize {
    1
}

fn default_loss() -> Loss {
    Loss::power(2.0).expect("squared error is a valid loss")
}

fn default_seed() -> u64 {
    SuiteOptions::default().seed
}

fn default_estimators() -> Vec<EstimatorKind> {
    vec![EstimatorKind::GenBayes { l: 0.0 }, EstimatorKind::Mre]
}

fn default_lambda_grid() -> Grid {
    Grid::Linear { start: 0.0, end: 3.0, points: 13 }
}

fn default_y_grid() -> Grid {
    Grid::Linear { start: -8.0, end: 8.0, points: 201 }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA,
            model: default_model(),
            n: default_n(),
            loss: default_loss(),
            estimators: default_estimators(),
            lambda_grid: default_lambda_grid(),
            y_grid: default_y_grid(),
            seed: default_seed(),
            tolerances: Tolerances::default(),
            risk_method: RiskChoice::Auto,
            output: Output::default(),
            sample: None,
            tag: None,
        }
    }
}

pub fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(invalid(format!("unsupported config schema {} (expected {SCHEMA})", self.schema)));
        }
        if self.n < 1 {
            return Err(invalid("n must be at least 1"));
        }
        self.model.validate()?;
        self.lambda_grid.points("lambda_grid")?;
        self.y_grid.points("y_grid")?;
        if self.lambda_grid.points("lambda_grid")?.iter().any(|l| *l < 0.0) {
            return Err(invalid("lambda_grid must be nonnegative"));
        }
        let t = &self.tolerances;
        if let Some(r) = t.rel {
            if !(r > 0.0 && r < 1.0) {
                return Err(invalid(format!("tolerances.rel must lie in (0, 1), got {r}")));
            }
        }
        if t.mc_reps < 2 || !(t.mc_band > 0.0) {
            return Err(invalid("tolerances need mc_reps >= 2 and mc_band > 0"));
        }
        if self.estimators.is_empty() {
            return Err(invalid("at least one estimator is required"));
        }
        for k in &self.estimators {
            EstimatorSpec::new(*k, self.setup()?, self.loss.clone())?;
        }
        if let Some(s) = &self.sample {
            if s.len() < 2 || s.iter().any(|v| !v.is_finite()) {
                return Err(invalid("sample needs at least two finite observations"));
            }
        }
        Ok(())
    }

    pub fn setup(&self) -> Result<ProblemSetup> {
        ProblemSetup::new(self.model.clone(), self.n)
    }

    pub fn specs(&self) -> Result<Vec<EstimatorSpec>> {
        let s = self.setup()?;
        self.estimators
            .iter()
            .map(|k| EstimatorSpec::new(*k, s.clone(), self.loss.clone()))
            .collect()
    }

    pub fn qspec(&self) -> QuadratureSpec {
        let q = QuadratureSpec::two_dim();
        match self.tolerances.rel {
            Some(r) => q.with_rel_tol(r),
            None => q,
        }
    }

    pub fn use_mc(&self) -> bool {
        match self.risk_method {
            RiskChoice::Auto => self.loss.singular_derivative(),
            RiskChoice::Quadrature => false,
            RiskChoice::MonteCarlo => true,
        }
    }

    /// Canonical JSON of the resolved configuration.
    pub fn resolved(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::from_json(r#"{"schema": 1}"#).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::from_json(r#"{"schema": 1, "colour": 3}"#).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn schema_is_required() {
        assert!(RunConfig::from_json(r#"{"n": 2}"#).is_err());
        assert!(RunConfig::from_json(r#"{"schema": 2}"#).is_err());
    }

    #[test]
    fn grids_resolve() {
        let g: Grid = serde_json::from_str(r#"{"log": {"start": 0.1, "end": 10, "points": 3}}"#).unwrap();
        let v = g.points("g").unwrap();
        assert!((v[1] - 1.0).abs() < 1e-15);
        let g: Grid = serde_json::from_str(r#"{"values": [2, 1]}"#).unwrap();
        assert!(g.points("g").is_err());
    }

    #[test]
    fn resolved_round_trips() {
        let c = RunConfig::from_json(
            r#"{"schema": 1, "model": {"kind": "student", "params": {"nu": 3}}, "n": 3,
                "loss": {"kind": "asym_power", "p": 2, "c1": 1, "c2": 2}}"#,
        )
        .unwrap();
        let back = RunConfig::from_json(&c.resolved().to_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn auto_risk_method_follows_the_loss() {
        let mut c = RunConfig::default();
        assert!(!c.use_mc());
        c.loss = Loss::power(0.5).unwrap();
        assert!(c.use_mc());
    }
}
