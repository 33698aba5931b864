//! Shared scenario setup: grid, parameters, noise library, initial state and
//! Wiener paths.

use std::path::Path;

use stochflow::fields::Grid;
use stochflow::fluid::{FluidParams, State};
use stochflow::noise::{build_solenoidal_library, NoiseCoefficients, RngSeed, WienerPath};
use stochflow::stepper::StepConfig;

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::initial::initial_state;

#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: Grid,
    pub params: FluidParams,
    pub noise: NoiseCoefficients,
    pub initial: State,
    pub step: StepConfig,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
}

impl Setup {
    pub fn new(cfg: &ScenarioConfig, base: &Path) -> Result<Self> {
        Self::on_shape(cfg, &cfg.grid.shape, base)
    }

    /// The scenario on another grid (same analytic data and noise modes).
    pub fn on_shape(cfg: &ScenarioConfig, shape: &[usize], base: &Path) -> Result<Self> {
        let grid = Grid::new(shape)?;
        let noise = build_solenoidal_library(&grid, &cfg.noise)?;
        let initial = initial_state(&cfg.initial, &grid, base)?;
        Ok(Self {
            grid,
            params: cfg.fluid,
            noise,
            initial,
            step: cfg.step_config(),
            dt: cfg.step.dt,
            horizon: cfg.horizon,
            seed: cfg.seed,
        })
    }

    /// Path of realization `index`; realization 0 drives single runs.
    pub fn path(&self, index: u64) -> Result<WienerPath> {
        Ok(WienerPath::new(
            RngSeed::new(self.seed, index),
            self.dt,
            self.noise.len(),
        )?)
    }

    pub fn clock(&self) -> OutputClock {
        OutputClock {
            t0: self.initial.time,
            interval: self.dt * self.step.stride as f64,
        }
    }
}

/// Output instants `t0 + j·dt·stride`, aligned with path-step boundaries so
/// that runs with different substepping report at common times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputClock {
    pub t0: f64,
    pub interval: f64,
}

impl OutputClock {
    /// Output index of `time`, if it is an output instant.
    pub fn index(&self, time: f64) -> Option<usize> {
        let r = (time - self.t0) / self.interval;
        let k = r.round();
        ((r - k).abs() < 1e-6 && k >= 0.0).then_some(k as usize)
    }
}
