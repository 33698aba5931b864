//! Stochastic time integration: Itô Euler–Maruyama with the correction
//! drift, and a Stratonovich Heun predictor–corrector with none.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fields::{spectral_gradients, ScalarField, VectorField};
use crate::fluid::{deterministic_rhs, velocity_unchecked, FluidParams, Scheme, State};
use crate::noise::{correction_drift_batch, NoiseCoefficients, WienerPath};

/// Stochastic integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stepper {
    ItoEm,
    StratHeun,
}

fn default_cfl() -> f64 {
    0.4
}

fn default_stride() -> usize {
    1
}

fn default_halvings() -> u32 {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub stepper: Stepper,
    pub scheme: Scheme,
    /// Velocity `C¹` guard `R`; `None` disables it.
    #[serde(default)]
    pub guard: Option<f64>,
    /// Record every `stride`-th executed step.
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Rejection halvings tolerated before declaring a floor trip.
    #[serde(default = "default_halvings")]
    pub max_halvings: u32,
}

impl StepConfig {
    pub fn new(stepper: Stepper, scheme: Scheme) -> Self {
        Self {
            cfl: default_cfl(),
            stepper,
            scheme,
            guard: None,
            stride: default_stride(),
            max_halvings: default_halvings(),
        }
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = Some(guard);
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(invalid(
                "cfl",
                format!("must lie in (0, 1], got {}", self.cfl),
            ));
        }
        if let Some(r) = self.guard {
            if !(r > 0.0) {
                return Err(invalid("guard", format!("must be positive, got {r}")));
            }
        }
        if self.stride == 0 {
            return Err(invalid("stride", "must be at least 1"));
        }
        Ok(())
    }
}

/// `cfl·h / (max|u| + max c_s + max_k sup|σ_k|)`, or `cfl·h` when every
/// speed vanishes.
pub fn cfl_dt(
    state: &State,
    params: &FluidParams,
    noise: &NoiseCoefficients,
    config: &StepConfig,
) -> Result<f64> {
    state.check_floor(params)?;
    let u = velocity_unchecked(state);
    let cs = state
        .rho
        .values()
        .iter()
        .map(|&r| params.sound_speed_at(r))
        .fold(0.0, f64::max);
    let speed = u.max_magnitude() + cs + noise.max_sup_norm();
    let h = state.grid().min_spacing();
    Ok(if speed > 0.0 {
        config.cfl * h / speed
    } else {
        config.cfl * h
    })
}

/// [`cfl_dt`] further limited by the explicit diffusion bound for viscosity
/// and the correction drift.
pub fn stable_dt(
    state: &State,
    params: &FluidParams,
    noise: &NoiseCoefficients,
    config: &StepConfig,
) -> Result<f64> {
    let dt = cfl_dt(state, params, noise, config)?;
    let diffusivity =
        (2.0 * params.mu + params.lambda) / state.rho.min() + 0.5 * noise.sup_norm_sq_sum();
    if diffusivity > 0.0 {
        let parabolic = config.cfl * 2.0 / (diffusivity * state.grid().max_wavenumber_sq());
        Ok(dt.min(parabolic))
    } else {
        Ok(dt)
    }
}

/// Outcome of a single step attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Accepted(State),
    /// The new density (or the Heun predictor) fell below the floor.
    Rejected {
        min_density: f64,
    },
}

struct Evaluation {
    drift: Vec<Vec<f64>>,
    grads: Vec<Vec<Vec<f64>>>,
}

fn channels(state: &State) -> Vec<&[f64]> {
    std::iter::once(state.rho.values())
        .chain(state.momentum.components().iter().map(|c| c.values()))
        .collect()
}

fn evaluate(
    state: &State,
    params: &FluidParams,
    noise: &NoiseCoefficients,
    scheme: Scheme,
    correction: bool,
) -> Result<Evaluation> {
    let t = deterministic_rhs(state, params, scheme)?;
    let mut drift: Vec<Vec<f64>> = std::iter::once(t.rho.into_values())
        .chain(
            t.momentum
                .into_components()
                .into_iter()
                .map(|c| c.into_values()),
        )
        .collect();
    let grads = if noise.is_empty() {
        Vec::new()
    } else {
        spectral_gradients(state.grid(), &channels(state))
    };
    if correction && !noise.is_empty() {
        for (d, c) in drift.iter_mut().zip(correction_drift_batch(noise, &grads)) {
            for (a, b) in d.iter_mut().zip(c) {
                *a += b;
            }
        }
    }
    Ok(Evaluation { drift, grads })
}

fn noise_increment(
    noise: &NoiseCoefficients,
    grads: &[Vec<Vec<f64>>],
    dw: &[f64],
) -> Vec<Vec<f64>> {
    grads.iter().map(|g| noise.transport(g, dw)).collect()
}

fn check_increments(noise: &NoiseCoefficients, dw: &[f64], dt: f64) -> Result<()> {
    if dw.len() != noise.len() {
        return Err(Error::LengthMismatch {
            expected: noise.len(),
            got: dw.len(),
        });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid("dt", "must be positive and finite"));
    }
    Ok(())
}

fn assemble(
    state: &State,
    channels: Vec<Vec<f64>>,
    time: f64,
    params: &FluidParams,
) -> Result<StepOutcome> {
    let grid = state.grid();
    let mut it = channels.into_iter();
    let rho = ScalarField::from_raw(grid, it.next().unwrap());
    let momentum = VectorField::from_raw(grid, it.collect());
    rho.ensure_finite("density after step")?;
    momentum.ensure_finite("momentum after step")?;
    let min_density = rho.min();
    if min_density < params.density_floor {
        return Ok(StepOutcome::Rejected { min_density });
    }
    Ok(StepOutcome::Accepted(State {
        rho,
        momentum,
        time,
    }))
}

/// `q + dt·(F(q) + ½Σ div(σ_k(σ_k·∇q))) + Σ_k (σ_k·∇q) dW_k`.
pub fn step_ito_em(
    state: &State,
    dt: f64,
    dw: &[f64],
    params: &FluidParams,
    noise: &NoiseCoefficients,
    config: &StepConfig,
) -> Result<StepOutcome> {
    check_increments(noise, dw, dt)?;
    let ev = evaluate(state, params, noise, config.scheme, true)?;
    let mut next: Vec<Vec<f64>> = channels(state)
        .into_iter()
        .zip(&ev.drift)
        .map(|(q, f)| q.iter().zip(f).map(|(a, b)| a + dt * b).collect())
        .collect();
    if !noise.is_empty() {
        for (n, g) in next.iter_mut().zip(noise_increment(noise, &ev.grads, dw)) {
            for (a, b) in n.iter_mut().zip(g) {
                *a += b;
            }
        }
    }
    assemble(state, next, state.time + dt, params)
}

/// Heun predictor–corrector on the Stratonovich form.
pub fn step_strat_heun(
    state: &State,
    dt: f64,
    dw: &[f64],
    params: &FluidParams,
    noise: &NoiseCoefficients,
    config: &StepConfig,
) -> Result<StepOutcome> {
    check_increments(noise, dw, dt)?;
    let ev0 = evaluate(state, params, noise, config.scheme, false)?;
    let g0 = if noise.is_empty() {
        Vec::new()
    } else {
        noise_increment(noise, &ev0.grads, dw)
    };
    let q0 = channels(state);
    let mut predictor: Vec<Vec<f64>> = q0
        .iter()
        .zip(&ev0.drift)
        .map(|(q, f)| q.iter().zip(f).map(|(a, b)| a + dt * b).collect())
        .collect();
    for (p, g) in predictor.iter_mut().zip(&g0) {
        for (a, b) in p.iter_mut().zip(g) {
            *a += b;
        }
    }
    let mid = match assemble(state, predictor, state.time + dt, params)? {
        StepOutcome::Accepted(s) => s,
        rejected => return Ok(rejected),
    };
    let ev1 = evaluate(&mid, params, noise, config.scheme, false)?;
    let g1 = if noise.is_empty() {
        Vec::new()
    } else {
        noise_increment(noise, &ev1.grads, dw)
    };
    let mut next: Vec<Vec<f64>> = q0
        .iter()
        .zip(ev0.drift.iter().zip(&ev1.drift))
        .map(|(q, (f0, f1))| {
            q.iter()
                .zip(f0.iter().zip(f1))
                .map(|(a, (b, c))| a + 0.5 * dt * (b + c))
                .collect()
        })
        .collect();
    for (n, (a, b)) in next.iter_mut().zip(g0.iter().zip(&g1)) {
        for (x, (y, z)) in n.iter_mut().zip(a.iter().zip(b)) {
            *x += 0.5 * (y + z);
        }
    }
    assemble(state, next, state.time + dt, params)
}

/// Dispatches on `config.stepper`.
pub fn step(
    state: &State,
    dt: f64,
    dw: &[f64],
    params: &FluidParams,
    noise: &NoiseCoefficients,
    config: &StepConfig,
) -> Result<StepOutcome> {
    match config.stepper {
        Stepper::ItoEm => step_ito_em(state, dt, dw, params, noise, config),
        Stepper::StratHeun => step_strat_heun(state, dt, dw, params, noise, config),
    }
}

/// Discrete `C¹` norm `max|u| + max_{i,j} |∂_j u_i|` (spectral gradient).
pub fn velocity_c1_norm(state: &State) -> f64 {
    let u = velocity_unchecked(state);
    let slices: Vec<&[f64]> = u.components().iter().map(|c| c.values()).collect();
    let grads = spectral_gradients(state.grid(), &slices);
    let max_grad = grads
        .iter()
        .flatten()
        .flatten()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    u.max_magnitude() + max_grad
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    GuardTripped { time: f64 },
    FloorTripped { time: f64 },
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }
}

/// One executed step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub time: f64,
    pub dt: f64,
    pub dw: Vec<f64>,
}

/// Data handed to an observer after every accepted step.
pub struct StepEvent<'a> {
    /// Zero-based count of executed steps.
    pub index: usize,
    pub before: &'a State,
    pub after: &'a State,
    pub dt: f64,
    pub dw: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub steps: Vec<StepRecord>,
    pub termination: Termination,
    pub stride: usize,
}

impl TrajectoryRecord {
    pub fn final_state(&self) -> &State {
        self.states
            .last()
            .expect("initial state is always recorded")
    }
}

struct Driver<'a, F> {
    path: &'a WienerPath,
    params: &'a FluidParams,
    noise: &'a NoiseCoefficients,
    config: &'a StepConfig,
    observer: F,
    executed: usize,
    steps: Vec<StepRecord>,
    t0: f64,
}

enum Interval {
    Done(State),
    Stop(State, Termination),
}

impl<F: FnMut(&StepEvent)> Driver<'_, F> {
    fn run_interval(
        &mut self,
        state: State,
        level: u32,
        index: u64,
        halvings: u32,
    ) -> Result<Interval> {
        let dt = self.path.dt_at(level);
        let max_dt = stable_dt(&state, self.params, self.noise, self.config)?;
        if dt > max_dt * (1.0 + 1e-12) {
            return self.split(state, level, index, halvings);
        }
        let dw = self.path.increment_at(level, index);
        match step(&state, dt, &dw, self.params, self.noise, self.config)? {
            StepOutcome::Accepted(mut next) => {
                next.time = self.t0 + (index + 1) as f64 * dt;
                (self.observer)(&StepEvent {
                    index: self.executed,
                    before: &state,
                    after: &next,
                    dt,
                    dw: &dw,
                });
                self.executed += 1;
                self.steps.push(StepRecord {
                    time: state.time,
                    dt,
                    dw,
                });
                if let Some(r) = self.config.guard {
                    if velocity_c1_norm(&next) > r {
                        let time = next.time;
                        return Ok(Interval::Stop(next, Termination::GuardTripped { time }));
                    }
                }
                Ok(Interval::Done(next))
            }
            StepOutcome::Rejected { .. } => {
                if halvings >= self.config.max_halvings {
                    let time = state.time;
                    return Ok(Interval::Stop(state, Termination::FloorTripped { time }));
                }
                self.split(state, level, index, halvings + 1)
            }
        }
    }

    fn split(&mut self, state: State, level: u32, index: u64, halvings: u32) -> Result<Interval> {
        if level >= 62 {
            return Err(Error::StepUnderflow { time: state.time });
        }
        let mid = match self.run_interval(state, level + 1, 2 * index, halvings)? {
            Interval::Done(s) => s,
            stop => return Ok(stop),
        };
        self.run_interval(mid, level + 1, 2 * index + 1, halvings)
    }
}

impl WienerPath {
    fn dt_at(&self, level: u32) -> f64 {
        self.dt() / (1u64 << (level - self.level())) as f64
    }
}

/// Number of path steps needed to reach `horizon`.
pub fn step_count(horizon: f64, dt: f64) -> u64 {
    ((horizon / dt) * (1.0 - 1e-12)).ceil().max(0.0) as u64
}

/// Integrates to `horizon` along `path`, calling `observer` after every
/// accepted step. A path step that exceeds [`stable_dt`] or produces a floor
/// violation is bisected along the Brownian bridge of the same path.
pub fn advance_observed<F: FnMut(&StepEvent)>(
    initial: &State,
    horizon: f64,
    path: &WienerPath,
    params: &FluidParams,
    noise: &NoiseCoefficients,
    config: &StepConfig,
    observer: F,
) -> Result<(State, Vec<StepRecord>, Termination)> {
    params.validate()?;
    config.validate()?;
    if !(horizon > 0.0) {
        return Err(invalid("horizon", "must be positive"));
    }
    if path.count() != noise.len() {
        return Err(Error::LengthMismatch {
            expected: noise.len(),
            got: path.count(),
        });
    }
    noise.grid().check_same(initial.grid())?;
    initial.check_floor(params)?;
    let mut driver = Driver {
        path,
        params,
        noise,
        config,
        observer,
        executed: 0,
        steps: Vec::new(),
        t0: initial.time,
    };
    let mut state = initial.clone();
    for j in 0..step_count(horizon, path.dt()) {
        match driver.run_interval(state, path.level(), j, 0)? {
            Interval::Done(s) => state = s,
            Interval::Stop(s, term) => return Ok((s, driver.steps, term)),
        }
    }
    Ok((state, driver.steps, Termination::Completed))
}

/// [`advance_observed`] recording every `config.stride`-th state.
pub fn advance(
    initial: &State,
    horizon: f64,
    path: &WienerPath,
    params: &FluidParams,
    noise: &NoiseCoefficients,
    config: &StepConfig,
) -> Result<TrajectoryRecord> {
    let stride = config.stride.max(1);
    let mut times = vec![initial.time];
    let mut states = vec![initial.clone()];
    let (last, steps, termination) =
        advance_observed(initial, horizon, path, params, noise, config, |ev| {
            if (ev.index + 1) % stride == 0 {
                times.push(ev.after.time);
                states.push(ev.after.clone());
            }
        })?;
    if times.last() != Some(&last.time) {
        times.push(last.time);
        states.push(last);
    }
    Ok(TrajectoryRecord {
        times,
        states,
        steps,
        termination,
        stride,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use crate::noise::{build_solenoidal_library, NoiseSpec, RngSeed};

    fn setup(n: usize) -> (Grid, FluidParams) {
        (Grid::uniform(2, n).unwrap(), FluidParams::euler(2.0, 1.0))
    }

    #[test]
    fn cfl_examples() {
        let (g, p) = setup(64);
        let state = State::at_rest(&g, 1.0);
        let cfg = StepConfig::new(Stepper::ItoEm, Scheme::RusanovFv);
        let empty = NoiseCoefficients::empty(&g);
        let h = 2.0 * std::f64::consts::PI / 64.0;
        let dt = cfl_dt(&state, &p, &empty, &cfg).unwrap();
        assert!((dt - 0.4 * h / 2f64.sqrt()).abs() < 1e-15);
        let lib = build_solenoidal_library(&g, &NoiseSpec::single(&[1, 0], 1.0, 0.0)).unwrap();
        assert!(cfl_dt(&state, &p, &lib, &cfg).unwrap() < dt);
    }

    #[test]
    fn constant_state_is_invariant() {
        let (g, p) = setup(16);
        let lib = build_solenoidal_library(&g, &NoiseSpec::random(4, 2, 0.5, 3)).unwrap();
        let path = WienerPath::new(RngSeed::new(1, 0), 0.01, 4).unwrap();
        let state = State::at_rest(&g, 1.3);
        for stepper in [Stepper::ItoEm, Stepper::StratHeun] {
            for scheme in [Scheme::CentralSpectral, Scheme::RusanovFv] {
                let cfg = StepConfig::new(stepper, scheme);
                let rec = advance(&state, 0.2, &path, &p, &lib, &cfg).unwrap();
                assert!(rec.termination.is_completed());
                let last = rec.final_state();
                assert_eq!(last.rho, state.rho);
                assert_eq!(last.momentum, state.momentum);
            }
        }
    }

    #[test]
    fn rejects_wrong_increment_count() {
        let (g, p) = setup(16);
        let lib = build_solenoidal_library(&g, &NoiseSpec::random(2, 2, 0.5, 3)).unwrap();
        let cfg = StepConfig::new(Stepper::ItoEm, Scheme::RusanovFv);
        let s = State::at_rest(&g, 1.0);
        assert!(step_ito_em(&s, 0.01, &[0.1], &p, &lib, &cfg).is_err());
    }
}
