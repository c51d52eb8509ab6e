//! Experiment configuration: JSON schema, parsing, and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which Hamiltonian to run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelConfig {
    /// Rotating-field model with static splitting `omega0` and drive strength
    /// `big_omega`.
    Ms { omega0: f64, big_omega: f64 },
    /// Precessing-spin model: field strength `b`, polar angle `theta`,
    /// precession rate `omega`.
    Schwinger { b: f64, theta: f64, omega: f64 },
    /// Hamiltonian samples loaded from a plain-text file and interpolated.
    MatrixFile { path: PathBuf },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridConfig {
    pub t_end: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Propagate,
    Decompose,
    Phases,
    MsCheck,
    EpsilonBound,
    Fidelity,
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Propagate => "propagate",
            TaskKind::Decompose => "decompose",
            TaskKind::Phases => "phases",
            TaskKind::MsCheck => "ms_check",
            TaskKind::EpsilonBound => "epsilon_bound",
            TaskKind::Fidelity => "fidelity",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Field to sweep: a model parameter name or `t_end`.
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn default_precision() -> usize {
    12
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
    /// Significant digits written to CSV.
    #[serde(default = "default_precision")]
    pub precision: usize,
}

fn default_format() -> OutputFormat {
    OutputFormat::Csv
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: None, format: OutputFormat::Csv, precision: 12 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    /// Tracked level index (ascending energy order at t = 0).
    pub level: usize,
    pub tasks: Vec<TaskKind>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Structural validation that does not require touching the filesystem.
    /// Model-dependent checks (level bounds for file models, Hermiticity of
    /// samples) happen when the model is instantiated.
    pub fn validate(&self) -> Result<()> {
        if !(self.grid.t_end > 0.0) || !self.grid.t_end.is_finite() {
            return Err(Error::ConfigInvalid {
                field: "grid.t_end".into(),
                reason: format!("must be finite and positive, got {}", self.grid.t_end),
            });
        }
        if self.grid.steps < 3 {
            return Err(Error::ConfigInvalid {
                field: "grid.steps".into(),
                reason: format!("need at least 3 steps, got {}", self.grid.steps),
            });
        }
        if self.tasks.is_empty() {
            return Err(Error::ConfigInvalid {
                field: "tasks".into(),
                reason: "at least one task is required".into(),
            });
        }
        if self.output.precision < 1 || self.output.precision > 17 {
            return Err(Error::ConfigInvalid {
                field: "output.precision".into(),
                reason: format!("must be in 1..=17, got {}", self.output.precision),
            });
        }
        match &self.model {
            ModelConfig::Ms { .. } | ModelConfig::Schwinger { .. } => {
                // 2x2 models
                if self.level >= 2 {
                    return Err(Error::ConfigInvalid {
                        field: "level".into(),
                        reason: format!("model has 2 levels, got level {}", self.level),
                    });
                }
            }
            ModelConfig::MatrixFile { .. } => {}
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::ConfigInvalid {
                    field: "sweep.values".into(),
                    reason: "sweep needs at least one value".into(),
                });
            }
            if sweep.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::ConfigInvalid {
                    field: "sweep.values".into(),
                    reason: "sweep values must be finite".into(),
                });
            }
            self.clone().with_sweep_value(&sweep.param, sweep.values[0])?;
        }
        Ok(())
    }

    /// Return a copy of the configuration with the swept parameter replaced.
    pub fn with_sweep_value(mut self, param: &str, value: f64) -> Result<Self> {
        match (&mut self.model, param) {
            (_, "t_end") => self.grid.t_end = value,
            (ModelConfig::Ms { omega0, .. }, "omega0") => *omega0 = value,
            (ModelConfig::Ms { big_omega, .. }, "big_omega") => *big_omega = value,
            (ModelConfig::Schwinger { b, .. }, "b") => *b = value,
            (ModelConfig::Schwinger { theta, .. }, "theta") => *theta = value,
            (ModelConfig::Schwinger { omega, .. }, "omega") => *omega = value,
            _ => {
                return Err(Error::ConfigInvalid {
                    field: "sweep.param".into(),
                    reason: format!("parameter `{param}` does not exist on this model"),
                })
            }
        }
        self.sweep = None;
        Ok(self)
    }
}
