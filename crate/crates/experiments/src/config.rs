//! Scenario configuration: a TOML file parsed into [`ScenarioConfig`],
//! validated before any field is allocated.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stochflow::fluid::{FluidParams, Scheme};
use stochflow::noise::NoiseSpec;
use stochflow::stepper::{StepConfig, Stepper};

use crate::error::{ExperimentError, Result};

fn config_error(field: &str, reason: impl Into<String>) -> ExperimentError {
    ExperimentError::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub shape: Vec<usize>,
}

fn default_cfl() -> f64 {
    0.4
}

fn default_halvings() -> u32 {
    8
}

/// Integrator settings; `dt` is the step of the driving Wiener path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSection {
    pub dt: f64,
    pub stepper: Stepper,
    pub scheme: Scheme,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub guard: Option<f64>,
    #[serde(default = "default_halvings")]
    pub max_halvings: u32,
}

fn default_resolution() -> usize {
    4
}

/// What to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenarioKind {
    Single {},
    Ensemble {
        paths: usize,
    },
    /// Viscosities `mu[i]`, with `λ = lambda_ratio·μ`.
    ViscositySweep {
        mu: Vec<f64>,
        #[serde(default)]
        lambda_ratio: f64,
    },
    /// The reference runs on a grid `multiplier` times finer per axis.
    WeakStrong {
        #[serde(default = "default_resolution")]
        multiplier: usize,
    },
}

fn default_rho() -> f64 {
    1.0
}

fn default_vortex() -> f64 {
    0.2
}

fn default_fine() -> u32 {
    16
}

/// Initial data recipes. Coordinates are `x₁, x₂[, x₃]` on `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Uniform density and momentum.
    Constant {
        #[serde(default = "default_rho")]
        rho: f64,
        #[serde(default)]
        momentum: Vec<f64>,
    },
    /// `ρ = ρ₀ + ε sin(ξ·x)`, `m = 0`.
    AcousticMode {
        epsilon: f64,
        wave_vector: Vec<i64>,
        #[serde(default = "default_rho")]
        rho: f64,
    },
    /// Cellular vortex flow `u = U(sin x₁ cos x₂, −cos x₁ sin x₂)` on top of an
    /// acoustic perturbation `ρ = ρ₀ + ε sin x₁` (2D only).
    VortexPair {
        #[serde(default = "default_vortex")]
        velocity: f64,
        #[serde(default)]
        epsilon: f64,
        #[serde(default = "default_rho")]
        rho: f64,
    },
    /// Uniform density with velocity `(A sin(f x₁) , 0.1 sin x₁[, 0])`: a fast
    /// oscillation in the first component over a smooth shear in the second.
    TwoScaleOscillatory {
        #[serde(default = "default_fine")]
        frequency: u32,
        amplitude: f64,
        #[serde(default = "default_rho")]
        rho: f64,
    },
    /// A state file written by a previous run (`final_state.json`).
    FromFile { path: PathBuf },
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    pub fluid: FluidParams,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub step: StepSection,
    pub scenario: ScenarioKind,
    pub initial: InitialCondition,
    pub horizon: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| ExperimentError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    /// The step configuration handed to the core stepper.
    pub fn step_config(&self) -> StepConfig {
        StepConfig {
            cfl: self.step.cfl,
            stepper: self.step.stepper,
            scheme: self.step.scheme,
            guard: self.step.guard,
            stride: self.stride,
            max_halvings: self.step.max_halvings,
        }
    }

    pub fn dim(&self) -> usize {
        self.grid.shape.len()
    }

    /// Checks every field without allocating grids or fields.
    pub fn validate(&self) -> Result<()> {
        let shape = &self.grid.shape;
        if !(2..=3).contains(&shape.len()) {
            return Err(config_error("grid.shape", "must have 2 or 3 entries"));
        }
        if shape.iter().any(|&n| n < 8) {
            return Err(config_error(
                "grid.shape",
                "every axis needs at least 8 points",
            ));
        }
        self.fluid
            .validate()
            .map_err(|e| config_error("fluid", e.to_string()))?;
        self.noise
            .validate()
            .map_err(|e| config_error("noise", e.to_string()))?;
        self.validate_noise_resolution()?;
        self.step_config()
            .validate()
            .map_err(|e| config_error("step", e.to_string()))?;
        if !(self.step.dt.is_finite() && self.step.dt > 0.0) {
            return Err(config_error("step.dt", "must be positive and finite"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(config_error("horizon", "must be positive and finite"));
        }
        if self.stride == 0 {
            return Err(config_error("stride", "must be at least 1"));
        }
        self.validate_scenario()?;
        self.validate_initial()
    }

    fn validate_noise_resolution(&self) -> Result<()> {
        let shape = &self.grid.shape;
        let min_n = *shape.iter().min().unwrap() as i64;
        if self.noise.count > 0 && 2 * self.noise.max_wavenumber as i64 >= min_n {
            return Err(config_error(
                "noise.max_wavenumber",
                format!("must stay below half the smallest axis ({min_n})"),
            ));
        }
        for m in &self.noise.modes {
            if m.wave_vector.len() != shape.len() {
                return Err(config_error(
                    "noise.modes",
                    "wave vector length must match the grid",
                ));
            }
            if m.wave_vector
                .iter()
                .zip(shape)
                .any(|(&k, &n)| 2 * k.abs() >= n as i64)
            {
                return Err(config_error(
                    "noise.modes",
                    "wave vector beyond the Nyquist band",
                ));
            }
        }
        Ok(())
    }

    fn validate_scenario(&self) -> Result<()> {
        match &self.scenario {
            ScenarioKind::Single {} => Ok(()),
            ScenarioKind::Ensemble { paths } => {
                if *paths < 2 {
                    return Err(config_error("scenario.paths", "need at least 2 paths"));
                }
                Ok(())
            }
            ScenarioKind::ViscositySweep { mu, lambda_ratio } => {
                if mu.len() < 2 {
                    return Err(config_error("scenario.mu", "need at least 2 viscosities"));
                }
                if mu.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
                    return Err(config_error(
                        "scenario.mu",
                        "entries must be finite and nonnegative",
                    ));
                }
                if mu.windows(2).any(|w| w[1] > w[0]) {
                    return Err(config_error("scenario.mu", "must be nonincreasing"));
                }
                if !(lambda_ratio.is_finite() && *lambda_ratio >= 0.0) {
                    return Err(config_error("scenario.lambda_ratio", "must be nonnegative"));
                }
                Ok(())
            }
            ScenarioKind::WeakStrong { multiplier } => {
                if *multiplier < 1 {
                    return Err(config_error("scenario.multiplier", "must be at least 1"));
                }
                if self.step.guard.is_none() {
                    return Err(config_error("step.guard", "weak-strong runs need a guard"));
                }
                if self.grid.shape.iter().any(|n| n * multiplier > 1024) {
                    return Err(config_error(
                        "scenario.multiplier",
                        "reference grid too large",
                    ));
                }
                Ok(())
            }
        }
    }

    fn validate_initial(&self) -> Result<()> {
        let dim = self.dim();
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(config_error(field, "must be positive and finite"))
            }
        };
        match &self.initial {
            InitialCondition::Constant { rho, momentum } => {
                positive("initial.rho", *rho)?;
                if !momentum.is_empty() && momentum.len() != dim {
                    return Err(config_error(
                        "initial.momentum",
                        "length must match the grid",
                    ));
                }
                Ok(())
            }
            InitialCondition::AcousticMode {
                epsilon,
                wave_vector,
                rho,
            } => {
                positive("initial.rho", *rho)?;
                if wave_vector.len() != dim || wave_vector.iter().all(|&k| k == 0) {
                    return Err(config_error(
                        "initial.wave_vector",
                        "must be nonzero and match the grid",
                    ));
                }
                if !(epsilon.abs() < *rho) {
                    return Err(config_error("initial.epsilon", "must be smaller than rho"));
                }
                Ok(())
            }
            InitialCondition::VortexPair {
                velocity,
                epsilon,
                rho,
            } => {
                positive("initial.rho", *rho)?;
                if dim != 2 {
                    return Err(config_error("initial", "vortex-pair is two-dimensional"));
                }
                if !velocity.is_finite() || !(epsilon.abs() < *rho) {
                    return Err(config_error(
                        "initial",
                        "velocity finite and |epsilon| < rho",
                    ));
                }
                Ok(())
            }
            InitialCondition::TwoScaleOscillatory {
                frequency,
                amplitude,
                rho,
            } => {
                positive("initial.rho", *rho)?;
                let min_n = *self.grid.shape.iter().min().unwrap() as u32;
                if *frequency == 0 || 2 * frequency >= min_n {
                    return Err(config_error(
                        "initial.frequency",
                        "must be resolved by the grid",
                    ));
                }
                if !amplitude.is_finite() {
                    return Err(config_error("initial.amplitude", "must be finite"));
                }
                Ok(())
            }
            InitialCondition::FromFile { path } => {
                if path.as_os_str().is_empty() {
                    return Err(config_error("initial.path", "must not be empty"));
                }
                Ok(())
            }
        }
    }
}
