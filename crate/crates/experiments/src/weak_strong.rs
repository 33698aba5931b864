//! Relative energy of a coarse solution against a resolved reference driven
//! by the same Wiener path.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use stochflow::diagnostics::{
    gronwall_rate, max_principle_bounds, relative_energy, relative_energy_rate, MaxPrincipleReport,
    RelativeEnergyLedger,
};
use stochflow::fields::{resample, resample_vector, restrict, restrict_vector, DerivativeMethod};
use stochflow::fluid::{velocity, State};
use stochflow::stepper::{advance_observed, StepEvent, Termination};

use crate::config::{InitialCondition, ScenarioConfig, ScenarioKind};
use crate::error::{ExperimentError, Result};
use crate::output::{Csv, OutputDir};
use crate::setup::Setup;
use crate::single::{PathSummary, Report};

/// Tolerated relative excursion of the reference density outside its
/// maximum-principle envelope before it is flagged.
pub const MAX_PRINCIPLE_TOLERANCE: f64 = 1e-3;

struct Recorded {
    states: Vec<State>,
    termination: Termination,
    steps: usize,
}

fn record(setup: &Setup) -> Result<Recorded> {
    let path = setup.path(0)?;
    let clock = setup.clock();
    let mut states = vec![setup.initial.clone()];
    let (last, steps, termination) = advance_observed(
        &setup.initial,
        setup.horizon,
        &path,
        &setup.params,
        &setup.noise,
        &setup.step,
        |ev: &StepEvent| {
            if clock.index(ev.after.time).is_some() {
                states.push(ev.after.clone());
            }
        },
    )?;
    if !last.is_finite() {
        return Err(stochflow::Error::NonFinite("state").into());
    }
    if termination.is_completed() && states.last().map(|s| s.time) != Some(last.time) {
        states.push(last);
    }
    Ok(Recorded {
        states,
        termination,
        steps: steps.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakStrongSummary {
    pub multiplier: usize,
    pub sup_relative_energy: f64,
    pub epsilon: f64,
    pub c_r: f64,
    pub max_excess: f64,
    pub truncated: bool,
    pub reference_termination: Termination,
    pub test_termination: Termination,
    pub reference_steps: usize,
    pub test_steps: usize,
    pub max_principle_violation: f64,
    pub max_principle_violated: bool,
}

#[derive(Debug, Clone)]
pub struct WeakStrongRun {
    pub ledger: RelativeEnergyLedger,
    pub max_principle: MaxPrincipleReport,
    pub summary: WeakStrongSummary,
    /// Reference states on the fine grid at the ledger times.
    pub reference: Vec<State>,
}

/// Runs the fine reference and the coarse test solution and compares them at
/// the common output instants up to the first trip.
pub fn simulate_weak_strong(
    cfg: &ScenarioConfig,
    base: &Path,
    multiplier: usize,
) -> Result<WeakStrongRun> {
    let coarse = Setup::new(cfg, base)?;
    let shape: Vec<usize> = cfg.grid.shape.iter().map(|n| n * multiplier).collect();
    let mut fine = if let InitialCondition::FromFile { .. } = cfg.initial {
        let mut s = Setup::on_shape(
            &ScenarioConfig {
                initial: InitialCondition::Constant {
                    rho: 1.0,
                    momentum: Vec::new(),
                },
                ..cfg.clone()
            },
            &shape,
            base,
        )?;
        s.initial = State::new(
            resample(&coarse.initial.rho, &s.grid)?,
            resample_vector(&coarse.initial.momentum, &s.grid)?,
            coarse.initial.time,
        )?;
        s
    } else {
        Setup::on_shape(cfg, &shape, base)?
    };
    fine.step.guard = cfg.step.guard;
    let reference = record(&fine)?;
    let test = record(&coarse)?;
    let n = reference
        .states
        .iter()
        .zip(&test.states)
        .take_while(|(a, b)| a.time == b.time)
        .count();
    let truncated = !reference.termination.is_completed() || !test.termination.is_completed();
    let sp = DerivativeMethod::Spectral;
    let params = &coarse.params;
    let (mut times, mut k, mut q, mut c) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (rs, ts) in reference.states.iter().zip(&test.states).take(n) {
        let r = restrict(&rs.rho, &coarse.grid)?;
        let rm = restrict_vector(&rs.momentum, &coarse.grid)?;
        let v = velocity(&State::new(r.clone(), rm, rs.time)?, params)?;
        times.push(ts.time);
        k.push(relative_energy(ts, &r, &v, None, params)?);
        q.push(relative_energy_rate(ts, &r, &v, None, params, sp)?);
        c.push(gronwall_rate(&v, params, sp)?);
    }
    let ledger = RelativeEnergyLedger::from_series(times, k, q, c)?;
    let ref_states: Vec<State> = reference.states.into_iter().take(n).collect();
    let max_principle = max_principle_bounds(&ref_states, params, sp, MAX_PRINCIPLE_TOLERANCE)?;
    let summary = WeakStrongSummary {
        multiplier,
        sup_relative_energy: ledger.sup(),
        epsilon: ledger.epsilon,
        c_r: ledger.c_r,
        max_excess: ledger.max_excess(),
        truncated,
        reference_termination: reference.termination,
        test_termination: test.termination,
        reference_steps: reference.steps,
        test_steps: test.steps,
        max_principle_violation: max_principle.max_violation,
        max_principle_violated: max_principle.violated,
    };
    Ok(WeakStrongRun {
        ledger,
        max_principle,
        summary,
        reference: ref_states,
    })
}

pub fn ledger_csv(l: &RelativeEnergyLedger) -> Csv {
    let mut csv = Csv::new(&[
        "time",
        "relative_energy",
        "rate",
        "gronwall_rate",
        "rate_integral",
        "envelope",
    ]);
    for i in 0..l.times.len() {
        csv.push(&[
            l.times[i],
            l.relative_energy[i],
            l.rate[i],
            l.gronwall_rate[i],
            l.rate_integral[i],
            l.envelope[i],
        ]);
    }
    csv
}

pub fn max_principle_csv(r: &MaxPrincipleReport) -> Csv {
    let mut csv = Csv::new(&["time", "lower", "upper", "observed_min", "observed_max"]);
    for i in 0..r.times.len() {
        csv.push(&[
            r.times[i],
            r.lower[i],
            r.upper[i],
            r.observed_min[i],
            r.observed_max[i],
        ]);
    }
    csv
}

/// `weak-strong`: writes `weak_strong.csv`, `max_principle.csv`,
/// `weak_strong_summary.json` and the manifest.
pub fn run_weak_strong(cfg: &ScenarioConfig, out: &Path, base: &Path) -> Result<Report> {
    let ScenarioKind::WeakStrong { multiplier } = cfg.scenario else {
        return Err(ExperimentError::Config {
            field: "scenario.kind".into(),
            reason: "expected weak-strong".into(),
        });
    };
    let start = Instant::now();
    let run = simulate_weak_strong(cfg, base, multiplier)?;
    let mut dir = OutputDir::create(out)?;
    dir.write_csv("weak_strong.csv", &ledger_csv(&run.ledger))?;
    dir.write_csv("max_principle.csv", &max_principle_csv(&run.max_principle))?;
    dir.write_json("weak_strong_summary.json", &run.summary)?;
    let s = &run.summary;
    let summaries = vec![
        PathSummary {
            index: 0,
            termination: s.reference_termination,
            final_time: run.reference.last().map_or(0.0, |r| r.time),
            steps: s.reference_steps,
        },
        PathSummary {
            index: 1,
            termination: s.test_termination,
            final_time: *run.ledger.times.last().unwrap(),
            steps: s.test_steps,
        },
    ];
    let invalidated = s.truncated.then(|| {
        format!(
            "ledger truncated: reference {:?}, test {:?}",
            s.reference_termination, s.test_termination
        )
    });
    let failures: Vec<String> = invalidated.iter().cloned().collect();
    dir.finish(
        "weak-strong",
        cfg,
        start.elapsed().as_secs_f64(),
        summaries,
        failures.clone(),
    )?;
    Ok(Report {
        out: out.to_path_buf(),
        invalidated,
        failures,
    })
}
