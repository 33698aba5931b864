//! Vanishing-viscosity sweeps on a shared Wiener path.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use stochflow::diagnostics::EnergyLedger;
use stochflow::fields::negative_sobolev_norm;
use stochflow::fluid::{FluidParams, State};
use stochflow::stepper::{advance_observed, StepEvent, Termination};

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::error::{ExperimentError, Result};
use crate::output::{Csv, OutputDir};
use crate::setup::Setup;
use crate::single::{PathSummary, Report};

/// Order of the negative Sobolev norm used for the Cauchy gaps.
pub const GAP_ORDER: u32 = 4;

/// One member of the sweep: states at every output instant.
#[derive(Debug, Clone)]
pub struct SweepMember {
    pub mu: f64,
    pub lambda: f64,
    pub states: Vec<State>,
    pub dissipation: f64,
    pub energy_final: f64,
    pub termination: Termination,
    pub steps: usize,
}

/// Gap between consecutive members `i` and `i + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub index: usize,
    pub mu_from: f64,
    pub mu_to: f64,
    pub gap_rho: f64,
    pub gap_m: f64,
}

fn run_member(setup: &Setup, mu: f64, lambda: f64) -> Result<SweepMember> {
    let params = FluidParams {
        mu,
        lambda,
        ..setup.params
    };
    let path = setup.path(0)?;
    let clock = setup.clock();
    let mut ledger = EnergyLedger::new(&setup.initial, &params, setup.step.scheme)?;
    let mut states = vec![setup.initial.clone()];
    let mut failure: Option<ExperimentError> = None;
    let (last, steps, termination) = advance_observed(
        &setup.initial,
        setup.horizon,
        &path,
        &params,
        &setup.noise,
        &setup.step,
        |ev: &StepEvent| {
            if failure.is_none() {
                failure = ledger.observe(ev, false).err().map(Into::into);
            }
            if clock.index(ev.after.time).is_some() {
                states.push(ev.after.clone());
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    if !last.is_finite() {
        return Err(stochflow::Error::NonFinite("state").into());
    }
    if states.last().map(|s| s.time) != Some(last.time) {
        states.push(last.clone());
    }
    ledger.record(&last)?;
    Ok(SweepMember {
        mu,
        lambda,
        states,
        dissipation: ledger.dissipation(),
        energy_final: ledger.rows().last().unwrap().energy_ns,
        termination,
        steps: steps.len(),
    })
}

/// `sup_t ‖a(t) − b(t)‖_{W^{−k,2}}` for density and momentum over the common
/// output instants.
pub fn cauchy_gap(a: &[State], b: &[State]) -> Result<(f64, f64)> {
    let (mut g_rho, mut g_m) = (0.0_f64, 0.0_f64);
    for (x, y) in a.iter().zip(b) {
        if x.time != y.time {
            break;
        }
        let d = x.rho.lincomb(1.0, &y.rho, -1.0)?;
        g_rho = g_rho.max(negative_sobolev_norm(&d, GAP_ORDER)?);
        let mut sq = 0.0;
        for (p, q) in x.momentum.components().iter().zip(y.momentum.components()) {
            sq += negative_sobolev_norm(&p.lincomb(1.0, q, -1.0)?, GAP_ORDER)?.powi(2);
        }
        g_m = g_m.max(sq.sqrt());
    }
    Ok((g_rho, g_m))
}

#[derive(Debug)]
pub struct SweepRun {
    pub members: Vec<Result<SweepMember>>,
    pub gaps: Vec<GapRow>,
}

/// Runs every viscosity of the list on the same path, `workers` at a time,
/// and tabulates consecutive gaps.
pub fn simulate_sweep(
    setup: &Setup,
    mu: &[f64],
    lambda_ratio: f64,
    workers: usize,
) -> Result<SweepRun> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ExperimentError::Config {
            field: "workers".into(),
            reason: e.to_string(),
        })?;
    let members: Vec<Result<SweepMember>> = pool.install(|| {
        mu.par_iter()
            .map(|&m| run_member(setup, m, lambda_ratio * m))
            .collect()
    });
    let mut gaps = Vec::new();
    for i in 0..mu.len() - 1 {
        let (gap_rho, gap_m) = match (&members[i], &members[i + 1]) {
            (Ok(a), Ok(b)) => cauchy_gap(&a.states, &b.states)?,
            _ => (f64::NAN, f64::NAN),
        };
        gaps.push(GapRow {
            index: i,
            mu_from: mu[i],
            mu_to: mu[i + 1],
            gap_rho,
            gap_m,
        });
    }
    Ok(SweepRun { members, gaps })
}

pub fn gaps_csv(rows: &[GapRow]) -> Csv {
    let mut csv = Csv::new(&["index", "mu_from", "mu_to", "gap_rho", "gap_m"]);
    for r in rows {
        csv.push(&[r.index as f64, r.mu_from, r.mu_to, r.gap_rho, r.gap_m]);
    }
    csv
}

pub fn members_csv(members: &[Result<SweepMember>], mu: &[f64]) -> Csv {
    let mut csv = Csv::new(&[
        "index",
        "mu",
        "lambda",
        "dissipation",
        "energy_final",
        "completed",
        "final_time",
    ]);
    for (i, m) in members.iter().enumerate() {
        match m {
            Ok(m) => csv.push(&[
                i as f64,
                m.mu,
                m.lambda,
                m.dissipation,
                m.energy_final,
                if m.termination.is_completed() {
                    1.0
                } else {
                    0.0
                },
                m.states.last().unwrap().time,
            ]),
            Err(_) => csv.push(&[i as f64, mu[i], f64::NAN, f64::NAN, f64::NAN, 0.0, f64::NAN]),
        }
    }
    csv
}

/// `sweep`: writes `sweep.csv` (Cauchy gaps), `sweep_runs.csv` and the
/// manifest.
pub fn run_viscosity_sweep(
    cfg: &ScenarioConfig,
    out: &Path,
    base: &Path,
    workers: usize,
) -> Result<Report> {
    let ScenarioKind::ViscositySweep { mu, lambda_ratio } = &cfg.scenario else {
        return Err(ExperimentError::Config {
            field: "scenario.kind".into(),
            reason: "expected viscosity-sweep".into(),
        });
    };
    let start = Instant::now();
    let setup = Setup::new(cfg, base)?;
    let run = simulate_sweep(&setup, mu, *lambda_ratio, workers)?;
    let mut dir = OutputDir::create(out)?;
    dir.write_csv("sweep.csv", &gaps_csv(&run.gaps))?;
    dir.write_csv("sweep_runs.csv", &members_csv(&run.members, mu))?;
    let mut failures = Vec::new();
    let mut summaries = Vec::new();
    for (i, m) in run.members.iter().enumerate() {
        match m {
            Ok(m) => {
                if !m.termination.is_completed() {
                    failures.push(format!("mu[{i}] = {}: {:?}", m.mu, m.termination));
                }
                summaries.push(PathSummary {
                    index: i as u64,
                    termination: m.termination,
                    final_time: m.states.last().unwrap().time,
                    steps: m.steps,
                });
            }
            Err(e) => failures.push(format!("mu[{i}] = {}: {e}", mu[i])),
        }
    }
    dir.finish(
        "sweep",
        cfg,
        start.elapsed().as_secs_f64(),
        summaries,
        failures.clone(),
    )?;
    let invalidated = (!failures.is_empty()).then(|| failures.join("; "));
    Ok(Report {
        out: out.to_path_buf(),
        invalidated,
        failures,
    })
}
