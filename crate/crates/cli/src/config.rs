//! Run configuration: JSON, unknown keys rejected, every numeric field checked
//! before any computation starts.

use std::fmt;
use std::path::{Path, PathBuf};

use fracdiff::fractional_ops::FracOrder;
use fracdiff::grid::{make_gaussian, SpatialGrid};
use fracdiff::moments::MomentSpec;
use serde::{Deserialize, Serialize};

/// A configuration problem tied to one field (`grid.n`, `initial.sigma`, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration at `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Spectral,
    Weyl,
    CaputoExact,
    CaputoL1,
    Perturbative,
    DerivativeTest,
    DispersionScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<DispersionScanConfig>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_length")]
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            n: default_n(),
            length: default_length(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Gaussian centre; zeros when omitted.
    #[serde(default)]
    pub mean: Option<Vec<f64>>,
    #[serde(default = "unit")]
    pub sigma: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self { mean: None, sigma: 1.0 }
    }
}

/// Closed-form dispersion for the `spectral` experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectralDispersion {
    Heat,
    DriftDiffusion {
        drift: Vec<f64>,
        diffusivity: f64,
        #[serde(default)]
        cubic: f64,
    },
    Power {
        coefficient: f64,
        exponent: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default)]
    pub t_min: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// Snapshot count for the exact solvers.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    /// Steps between snapshots for the time-stepping solvers.
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<SpectralDispersion>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            beta: None,
            epsilon: None,
            dt: None,
            t_min: 0.0,
            t_max: default_t_max(),
            snapshots: default_snapshots(),
            snapshot_stride: default_stride(),
            dispersion: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Cumulant multi-indices to track, e.g. `[[1], [2], [3]]`.
    #[serde(default)]
    pub moment_orders: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
    /// Repeat the run on a doubled box and flag box-dependent moments.
    #[serde(default)]
    pub box_check: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            moment_orders: Vec::new(),
            fit_window: None,
            box_check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Also write every density snapshot.
    #[serde(default)]
    pub snapshots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            formats: default_formats(),
            snapshots: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    /// `[re, im]`.
    pub coefficient: [f64; 2],
    pub s_power: usize,
    pub k_powers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DispersionScanConfig {
    pub terms: Vec<TermConfig>,
    pub k_min: f64,
    pub k_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_rate_order")]
    pub max_cumulant_order: u32,
    #[serde(default = "default_rate_step")]
    pub rate_step: f64,
}

fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}
fn default_n() -> usize {
    512
}
fn default_length() -> f64 {
    60.0
}
fn default_t_max() -> f64 {
    10.0
}
fn default_snapshots() -> usize {
    100
}
fn default_stride() -> usize {
    100
}
fn default_directory() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv]
}
fn default_points() -> usize {
    101
}
fn default_rate_order() -> u32 {
    3
}
fn default_rate_step() -> f64 {
    1e-2
}

/// Parses JSON text; errors name the offending path.
pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "<root>".to_string() } else { path };
        ConfigError::new(field, e.into_inner().to_string())
    })
}

pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
    Ok(parse(&text)?)
}

fn lib_error(field: &str, e: fracdiff::Error) -> ConfigError {
    match e {
        fracdiff::Error::InvalidParameter { reason, .. } => ConfigError::new(field, reason),
        other => ConfigError::new(field, other.to_string()),
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be positive and finite, got {v}")))
    }
}

fn required<T: Copy>(field: &str, v: Option<T>, experiment: Experiment) -> Result<T, ConfigError> {
    v.ok_or_else(|| ConfigError::new(field, format!("is required for experiment {experiment:?}")))
}

impl RunConfig {
    /// Checks every field against the preconditions of the operations the
    /// experiment will call.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let ex = self.experiment;
        let ev = &self.evolution;
        let uses_grid = !matches!(ex, Experiment::DerivativeTest | Experiment::DispersionScan);
        if uses_grid {
            let grid = self.grid()?;
            let mean = self.mean();
            if mean.len() != self.grid.dim {
                return Err(ConfigError::new(
                    "initial.mean",
                    format!("has {} entries for a {}-dimensional grid", mean.len(), self.grid.dim),
                ));
            }
            make_gaussian(&grid, &mean, self.initial.sigma).map_err(|e| lib_error("initial.sigma", e))?;
            if !(ev.t_max.is_finite() && ev.t_max > ev.t_min && ev.t_min >= 0.0) {
                return Err(ConfigError::new(
                    "evolution.t_max",
                    format!("need 0 ≤ t_min < t_max, got t_min = {}, t_max = {}", ev.t_min, ev.t_max),
                ));
            }
            for (i, alpha) in self.analysis.moment_orders.iter().enumerate() {
                let field = format!("analysis.moment_orders[{i}]");
                MomentSpec::new(alpha.clone()).map_err(|e| lib_error(&field, e))?;
                if alpha.len() != self.grid.dim {
                    return Err(ConfigError::new(field, "needs one entry per grid axis"));
                }
                if alpha.iter().sum::<u32>() == 0 {
                    return Err(ConfigError::new(field, "order must be at least 1"));
                }
            }
            if let Some([lo, hi]) = self.analysis.fit_window {
                if !(lo > 0.0 && hi > lo) {
                    return Err(ConfigError::new(
                        "analysis.fit_window",
                        format!("need 0 < t_min < t_max, got [{lo}, {hi}]"),
                    ));
                }
            }
        }
        match ex {
            Experiment::Spectral => {
                if ev.snapshots < 2 {
                    return Err(ConfigError::new("evolution.snapshots", "need at least 2"));
                }
                match &ev.dispersion {
                    None | Some(SpectralDispersion::Heat) => {}
                    Some(SpectralDispersion::DriftDiffusion { drift, diffusivity, .. }) => {
                        if drift.len() != self.grid.dim {
                            return Err(ConfigError::new(
                                "evolution.dispersion.drift",
                                "needs one entry per grid axis",
                            ));
                        }
                        if !(*diffusivity >= 0.0) {
                            return Err(ConfigError::new("evolution.dispersion.diffusivity", "must be ≥ 0"));
                        }
                    }
                    Some(SpectralDispersion::Power { coefficient, exponent }) => {
                        if !(*coefficient >= 0.0) {
                            return Err(ConfigError::new("evolution.dispersion.coefficient", "must be ≥ 0"));
                        }
                        positive("evolution.dispersion.exponent", *exponent)?;
                    }
                }
            }
            Experiment::Weyl | Experiment::CaputoExact => {
                let beta = required("evolution.beta", ev.beta, ex)?;
                FracOrder::new(beta).map_err(|e| lib_error("evolution.beta", e))?;
                if ex == Experiment::CaputoExact && beta > 1.0 {
                    return Err(ConfigError::new("evolution.beta", "must lie in (0, 1] for caputo_exact"));
                }
                if ev.snapshots < 2 {
                    return Err(ConfigError::new("evolution.snapshots", "need at least 2"));
                }
            }
            Experiment::CaputoL1 | Experiment::DerivativeTest => {
                let beta = required("evolution.beta", ev.beta, ex)?;
                FracOrder::memory_order(beta).map_err(|e| lib_error("evolution.beta", e))?;
                self.stepping()?;
            }
            Experiment::Perturbative => {
                let eps = required("evolution.epsilon", ev.epsilon, ex)?;
                if !(0.0..=fracdiff::evolution::perturbative::DEFAULT_EPSILON_GUARD).contains(&eps) {
                    return Err(ConfigError::new(
                        "evolution.epsilon",
                        format!(
                            "must lie in [0, {}], got {eps}",
                            fracdiff::evolution::perturbative::DEFAULT_EPSILON_GUARD
                        ),
                    ));
                }
                self.stepping()?;
            }
            Experiment::DispersionScan => {
                let d = self
                    .dispersion
                    .as_ref()
                    .ok_or_else(|| ConfigError::new("dispersion", "is required for experiment DispersionScan"))?;
                if d.terms.is_empty() {
                    return Err(ConfigError::new("dispersion.terms", "need at least one term"));
                }
                let dim = d.terms[0].k_powers.len();
                if !(1..=2).contains(&dim) || d.terms.iter().any(|t| t.k_powers.len() != dim) {
                    return Err(ConfigError::new(
                        "dispersion.terms",
                        "every term needs k_powers of the same length, 1 or 2",
                    ));
                }
                if !(d.k_min.is_finite() && d.k_max.is_finite() && d.k_max > d.k_min) {
                    return Err(ConfigError::new("dispersion.k_max", "need k_min < k_max"));
                }
                if d.points < 2 {
                    return Err(ConfigError::new("dispersion.points", "need at least 2"));
                }
                if !(1..=4).contains(&d.max_cumulant_order) {
                    return Err(ConfigError::new("dispersion.max_cumulant_order", "must lie in 1..=4"));
                }
                positive("dispersion.rate_step", d.rate_step)?;
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<SpatialGrid<f64>, ConfigError> {
        SpatialGrid::new(self.grid.dim, self.grid.n, self.grid.length).map_err(|e| {
            let field = match &e {
                fracdiff::Error::InvalidParameter { name, .. } if name.contains("dim") => "grid.dim",
                fracdiff::Error::InvalidParameter { name, .. } if name.contains("length") => "grid.length",
                _ => "grid.n",
            };
            lib_error(field, e)
        })
    }

    pub fn mean(&self) -> Vec<f64> {
        self.initial.mean.clone().unwrap_or_else(|| vec![0.0; self.grid.dim])
    }

    /// `(dt, n_steps)` for the time-stepping experiments.
    pub fn stepping(&self) -> Result<(f64, usize), ConfigError> {
        let ev = &self.evolution;
        let dt = required("evolution.dt", ev.dt, self.experiment)?;
        positive("evolution.dt", dt)?;
        positive("evolution.t_max", ev.t_max)?;
        let steps = ev.t_max / dt;
        if steps < 1.0 || (steps - steps.round()).abs() > 1e-9 * steps {
            return Err(ConfigError::new(
                "evolution.dt",
                format!("t_max = {} must be a whole multiple of dt = {dt}", ev.t_max),
            ));
        }
        if ev.snapshot_stride == 0 {
            return Err(ConfigError::new("evolution.snapshot_stride", "must be at least 1"));
        }
        Ok((dt, steps.round() as usize))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let e = parse(r#"{"experiment": "weyl", "grid": {"n": 64, "size": 3}}"#).unwrap_err();
        assert_eq!(e.field, "grid.size");
        assert!(e.message.contains("size"), "{e}");
    }

    #[test]
    fn negative_sigma_names_field() {
        let c = parse(r#"{"experiment": "weyl", "evolution": {"beta": 1.0}, "initial": {"sigma": -1}}"#).unwrap();
        assert_eq!(c.validate().unwrap_err().field, "initial.sigma");
    }

    #[test]
    fn stepping_requires_whole_steps() {
        let c = parse(r#"{"experiment": "caputo_l1", "evolution": {"beta": 0.7, "dt": 0.3, "t_max": 1}}"#).unwrap();
        assert_eq!(c.validate().unwrap_err().field, "evolution.dt");
        let c = parse(r#"{"experiment": "caputo_l1", "evolution": {"beta": 1.2, "dt": 0.1, "t_max": 1}}"#).unwrap();
        assert_eq!(c.validate().unwrap_err().field, "evolution.beta");
    }

    #[test]
    fn defaults_fill_in() {
        let c = parse(r#"{"experiment": "caputo_exact", "evolution": {"beta": 0.5}}"#).unwrap();
        c.validate().unwrap();
        assert_eq!(c.grid.n, 512);
        assert_eq!(c.output.formats, vec![Format::Csv]);
    }
}
