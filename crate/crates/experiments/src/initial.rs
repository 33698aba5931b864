//! Initial states and the JSON state file format.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stochflow::fields::{Grid, ScalarField, VectorField};
use stochflow::fluid::State;

use crate::config::InitialCondition;
use crate::error::{io_error, ExperimentError, Result};

/// Serialized state: row-major samples, last axis contiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub shape: Vec<usize>,
    pub time: f64,
    pub rho: Vec<f64>,
    pub momentum: Vec<Vec<f64>>,
}

impl StateFile {
    pub fn from_state(state: &State) -> Self {
        Self {
            shape: state.grid().shape().to_vec(),
            time: state.time,
            rho: state.rho.values().to_vec(),
            momentum: state
                .momentum
                .components()
                .iter()
                .map(|c| c.values().to_vec())
                .collect(),
        }
    }

    pub fn into_state(self, grid: &Grid) -> Result<State> {
        if self.shape != grid.shape() {
            return Err(ExperimentError::Config {
                field: "initial.path".into(),
                reason: format!(
                    "state shape {:?} does not match grid {:?}",
                    self.shape,
                    grid.shape()
                ),
            });
        }
        let rho = ScalarField::new(grid, self.rho)?;
        let comps = self
            .momentum
            .into_iter()
            .map(|c| ScalarField::new(grid, c))
            .collect::<stochflow::Result<Vec<_>>>()?;
        Ok(State::new(rho, VectorField::new(comps)?, 0.0)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Builds the initial state of `recipe` on `grid`; file paths are resolved
/// relative to `base`.
pub fn initial_state(recipe: &InitialCondition, grid: &Grid, base: &Path) -> Result<State> {
    let dim = grid.dim();
    let state = match recipe {
        InitialCondition::Constant { rho, momentum } => {
            let m = if momentum.is_empty() {
                vec![0.0; dim]
            } else {
                momentum.clone()
            };
            State::new(
                ScalarField::constant(grid, *rho),
                VectorField::constant(grid, &m),
                0.0,
            )?
        }
        InitialCondition::AcousticMode {
            epsilon,
            wave_vector,
            rho,
        } => {
            let r = ScalarField::from_fn(grid, |x| {
                let phase: f64 = wave_vector
                    .iter()
                    .zip(x)
                    .map(|(&k, &xi)| k as f64 * xi)
                    .sum();
                rho + epsilon * phase.sin()
            })?;
            State::new(r, VectorField::zeros(grid), 0.0)?
        }
        InitialCondition::VortexPair {
            velocity,
            epsilon,
            rho,
        } => {
            let r = ScalarField::from_fn(grid, |x| rho + epsilon * x[0].sin())?;
            let u = VectorField::from_fn(grid, |x| {
                vec![
                    velocity * x[0].sin() * x[1].cos(),
                    -velocity * x[0].cos() * x[1].sin(),
                ]
            })?;
            let m = u.scale_by(&r)?;
            State::new(r, m, 0.0)?
        }
        InitialCondition::TwoScaleOscillatory {
            frequency,
            amplitude,
            rho,
        } => {
            let f = *frequency as f64;
            let u = VectorField::from_fn(grid, |x| {
                let mut v = vec![0.0; dim];
                v[0] = amplitude * (f * x[0]).sin();
                v[1] = 0.1 * x[0].sin();
                v
            })?;
            let r = ScalarField::constant(grid, *rho);
            let m = u.scale_by(&r)?;
            State::new(r, m, 0.0)?
        }
        InitialCondition::FromFile { path } => {
            let full = if path.is_absolute() {
                path.clone()
            } else {
                base.join(path)
            };
            StateFile::read(&full)?.into_state(grid)?
        }
    };
    Ok(state)
}
