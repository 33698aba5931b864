//! Single simulation: energy stream, trajectory summary and final state.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use stochflow::diagnostics::{EnergyLedger, EnergyRow};
use stochflow::fluid::{velocity, State};
use stochflow::stepper::{advance_observed, velocity_c1_norm, StepEvent, Termination};

use crate::config::ScenarioConfig;
use crate::error::{ExperimentError, Result};
use crate::initial::StateFile;
use crate::output::{Csv, OutputDir};
use crate::setup::Setup;

/// Per-output-instant summary of the state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub time: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub max_speed: f64,
    pub velocity_c1: f64,
}

impl TrajectoryRow {
    fn of(state: &State, setup: &Setup) -> Result<Self> {
        Ok(Self {
            time: state.time,
            rho_min: state.rho.min(),
            rho_max: state.rho.max(),
            max_speed: velocity(state, &setup.params)?.max_magnitude(),
            velocity_c1: velocity_c1_norm(state),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SingleRun {
    pub energy: Vec<EnergyRow>,
    pub trajectory: Vec<TrajectoryRow>,
    pub final_state: State,
    pub termination: Termination,
    pub steps: usize,
}

/// Runs realization `index` of `setup` and records at the output clock.
pub fn simulate(setup: &Setup, index: u64) -> Result<SingleRun> {
    let path = setup.path(index)?;
    let clock = setup.clock();
    let mut ledger = EnergyLedger::new(&setup.initial, &setup.params, setup.step.scheme)?;
    let mut trajectory = vec![TrajectoryRow::of(&setup.initial, setup)?];
    let mut failure: Option<ExperimentError> = None;
    let mut on_step = |ev: &StepEvent| -> Result<()> {
        let record = clock.index(ev.after.time).is_some();
        ledger.observe(ev, record)?;
        if record {
            trajectory.push(TrajectoryRow::of(ev.after, setup)?);
        }
        Ok(())
    };
    let (last, steps, termination) = advance_observed(
        &setup.initial,
        setup.horizon,
        &path,
        &setup.params,
        &setup.noise,
        &setup.step,
        |ev| {
            if failure.is_none() {
                failure = on_step(ev).err();
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    if ledger.rows().last().map(|r| r.time) != Some(last.time) {
        ledger.record(&last)?;
        trajectory.push(TrajectoryRow::of(&last, setup)?);
    }
    Ok(SingleRun {
        energy: ledger.rows().to_vec(),
        trajectory,
        final_state: last,
        termination,
        steps: steps.len(),
    })
}

pub fn energy_csv(rows: &[EnergyRow], dim: usize) -> Csv {
    let mut header = vec![
        "time",
        "energy_ns",
        "dissipation_cum",
        "energy_budget_residual",
        "mass",
    ];
    header.extend(["momentum_x", "momentum_y", "momentum_z"].iter().take(dim));
    let mut csv = Csv::new(&header);
    for r in rows {
        let mut v = vec![
            r.time,
            r.energy_ns,
            r.dissipation_cum,
            r.energy_budget_residual,
            r.mass,
        ];
        v.extend(&r.momentum);
        csv.push(&v);
    }
    csv
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> Csv {
    let mut csv = Csv::new(&["time", "rho_min", "rho_max", "max_speed", "velocity_c1"]);
    for r in rows {
        csv.push(&[r.time, r.rho_min, r.rho_max, r.max_speed, r.velocity_c1]);
    }
    csv
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    pub index: u64,
    pub termination: Termination,
    pub final_time: f64,
    pub steps: usize,
}

/// Outcome of a runner: the scenario is invalidated when a trip cut it short.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub out: std::path::PathBuf,
    pub invalidated: Option<String>,
    pub failures: Vec<String>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.invalidated.is_some() {
            4
        } else {
            0
        }
    }
}

/// `simulate`: writes `energy.csv`, `trajectory.csv`, `final_state.json` and
/// the manifest.
pub fn run_single(cfg: &ScenarioConfig, out: &Path, base: &Path) -> Result<Report> {
    let start = Instant::now();
    let setup = Setup::new(cfg, base)?;
    let run = simulate(&setup, 0)?;
    if !run.final_state.is_finite() {
        return Err(stochflow::Error::NonFinite("state").into());
    }
    let mut dir = OutputDir::create(out)?;
    dir.write_csv("energy.csv", &energy_csv(&run.energy, setup.grid.dim()))?;
    dir.write_csv("trajectory.csv", &trajectory_csv(&run.trajectory))?;
    dir.write_json("final_state.json", &StateFile::from_state(&run.final_state))?;
    let summary = PathSummary {
        index: 0,
        termination: run.termination,
        final_time: run.final_state.time,
        steps: run.steps,
    };
    let invalidated = (!run.termination.is_completed())
        .then(|| format!("run stopped early: {:?}", run.termination));
    dir.finish(
        "simulate",
        cfg,
        start.elapsed().as_secs_f64(),
        vec![summary],
        Vec::new(),
    )?;
    Ok(Report {
        out: out.to_path_buf(),
        invalidated,
        failures: Vec::new(),
    })
}
