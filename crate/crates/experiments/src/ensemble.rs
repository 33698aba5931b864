//! Monte Carlo ensembles with martingale-residual statistics.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use stochflow::diagnostics::{
    energy_ns, ContinuityProbe, DefectPolicy, MartingaleProbe, MomentumProbe, SampleStatistics,
};
use stochflow::fields::{ScalarField, VectorField};
use stochflow::stepper::{advance_observed, StepEvent, Termination};

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::error::{ExperimentError, Result};
use crate::output::OutputDir;
use crate::setup::Setup;
use crate::single::Report;

/// Probe test functions `φ = sin x₁` and `𝛗 = (sin x₂, 0[, 0])`.
pub fn probe_functions(setup: &Setup) -> Result<(ScalarField, VectorField)> {
    let dim = setup.grid.dim();
    let phi = ScalarField::from_fn(&setup.grid, |x| x[0].sin())?;
    let vphi = VectorField::from_fn(&setup.grid, |x| {
        let mut v = vec![0.0; dim];
        v[0] = x[1].sin();
        v
    })?;
    Ok((phi, vphi))
}

/// Per-path record of the ensemble (one JSONL line).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsemblePath {
    pub index: u64,
    pub termination: Termination,
    pub final_time: f64,
    pub steps: usize,
    pub energy_final: f64,
    pub m1: f64,
    pub m2: f64,
    pub predicted_qv1: f64,
    pub predicted_qv2: f64,
    pub empirical_qv1: f64,
    pub empirical_qv2: f64,
    pub predicted_cross: f64,
    pub empirical_cross: f64,
}

fn run_path(
    setup: &Setup,
    index: u64,
    phi: &ScalarField,
    vphi: &VectorField,
) -> Result<EnsemblePath> {
    let path = setup.path(index)?;
    let t0 = setup.initial.time;
    let mut p1 = ContinuityProbe::new(phi, &setup.noise, t0)?;
    let mut p2 = MomentumProbe::new(
        vphi,
        &setup.noise,
        &setup.params,
        setup.step.scheme,
        DefectPolicy::Zero,
        t0,
    )?;
    let mut failure: Option<ExperimentError> = None;
    let (last, steps, termination) = advance_observed(
        &setup.initial,
        setup.horizon,
        &path,
        &setup.params,
        &setup.noise,
        &setup.step,
        |ev: &StepEvent| {
            if failure.is_none() {
                failure = p1
                    .observe(ev)
                    .and_then(|_| p2.observe(ev))
                    .err()
                    .map(Into::into);
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    if !last.is_finite() {
        return Err(stochflow::Error::NonFinite("state").into());
    }
    let (m1, m2): (MartingaleProbe, MartingaleProbe) = (p1.finish(), p2.finish());
    let predicted_cross = *m1.predicted_cross_variation(&m2)?.last().unwrap();
    let empirical_cross: f64 = m1
        .residual
        .windows(2)
        .zip(m2.residual.windows(2))
        .map(|(a, b)| (a[1] - a[0]) * (b[1] - b[0]))
        .sum();
    Ok(EnsemblePath {
        index,
        termination,
        final_time: last.time,
        steps: steps.len(),
        energy_final: energy_ns(&last, &setup.params)?,
        m1: m1.final_residual(),
        m2: m2.final_residual(),
        predicted_qv1: m1.final_predicted_qv(),
        predicted_qv2: m2.final_predicted_qv(),
        empirical_qv1: *m1.empirical_qv.last().unwrap(),
        empirical_qv2: *m2.empirical_qv.last().unwrap(),
        predicted_cross,
        empirical_cross,
    })
}

/// One line of the statistics stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProbeStatistic {
    /// Sample moments of a terminal residual; a martingale has mean zero.
    Moment {
        quantity: String,
        count: usize,
        mean: f64,
        variance: f64,
        std_error: f64,
    },
    /// Sample variance of a terminal residual against the mean predicted
    /// quadratic variation, also with the halved normalization.
    Variance {
        quantity: String,
        empirical: f64,
        predicted: f64,
        predicted_half: f64,
        ratio: f64,
    },
    /// Mean pathwise cross-variation against the mean predicted one.
    Cross {
        empirical: f64,
        predicted: f64,
        ratio: f64,
        sample_covariance: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun {
    pub paths: Vec<EnsemblePath>,
    pub failures: Vec<String>,
    pub statistics: Vec<ProbeStatistic>,
}

/// `a / b`, with `0 / 0 = 0` so that degenerate ensembles report zeros.
fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        0.0
    } else {
        a / b
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Statistics over the completed paths (in index order).
pub fn statistics(paths: &[EnsemblePath]) -> Result<Vec<ProbeStatistic>> {
    let done: Vec<&EnsemblePath> = paths
        .iter()
        .filter(|p| p.termination.is_completed())
        .collect();
    let col = |f: fn(&EnsemblePath) -> f64| done.iter().map(|p| f(p)).collect::<Vec<f64>>();
    let (m1, m2) = (col(|p| p.m1), col(|p| p.m2));
    let mut out = Vec::new();
    for (name, samples, predicted) in [
        ("m1", &m1, col(|p| p.predicted_qv1)),
        ("m2", &m2, col(|p| p.predicted_qv2)),
    ] {
        let s = SampleStatistics::from_samples(samples)?;
        out.push(ProbeStatistic::Moment {
            quantity: name.into(),
            count: s.count,
            mean: s.mean,
            variance: s.variance,
            std_error: s.std_error,
        });
        let predicted = mean(&predicted);
        out.push(ProbeStatistic::Variance {
            quantity: name.into(),
            empirical: s.variance,
            predicted,
            predicted_half: 0.5 * predicted,
            ratio: ratio(s.variance, predicted),
        });
    }
    let empirical = mean(&col(|p| p.empirical_cross));
    let predicted = mean(&col(|p| p.predicted_cross));
    out.push(ProbeStatistic::Cross {
        empirical,
        predicted,
        ratio: ratio(empirical, predicted),
        sample_covariance: SampleStatistics::covariance(&m1, &m2)?,
    });
    Ok(out)
}

/// Runs paths `0..count` on `workers` threads (0: all cores). Results are
/// ordered by path index whatever the scheduling.
pub fn simulate_ensemble(setup: &Setup, count: usize, workers: usize) -> Result<EnsembleRun> {
    let (phi, vphi) = probe_functions(setup)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ExperimentError::Config {
            field: "workers".into(),
            reason: e.to_string(),
        })?;
    let results: Vec<Result<EnsemblePath>> = pool.install(|| {
        (0..count as u64)
            .into_par_iter()
            .map(|i| run_path(setup, i, &phi, &vphi))
            .collect()
    });
    let mut paths = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => {
                if !p.termination.is_completed() {
                    failures.push(format!("path {i}: {:?}", p.termination));
                }
                paths.push(p);
            }
            Err(e) => failures.push(format!("path {i}: {e}")),
        }
    }
    let statistics = if paths
        .iter()
        .filter(|p| p.termination.is_completed())
        .count()
        >= 2
    {
        statistics(&paths)?
    } else {
        Vec::new()
    };
    Ok(EnsembleRun {
        paths,
        failures,
        statistics,
    })
}

/// `ensemble`: writes `paths.jsonl`, `probe_stats.jsonl` and the manifest.
pub fn run_ensemble(
    cfg: &ScenarioConfig,
    out: &Path,
    base: &Path,
    workers: usize,
) -> Result<Report> {
    let ScenarioKind::Ensemble { paths } = cfg.scenario else {
        return Err(ExperimentError::Config {
            field: "scenario.kind".into(),
            reason: "expected ensemble".into(),
        });
    };
    let start = Instant::now();
    let setup = Setup::new(cfg, base)?;
    let run = simulate_ensemble(&setup, paths, workers)?;
    let mut dir = OutputDir::create(out)?;
    dir.write_jsonl("paths.jsonl", &run.paths)?;
    dir.write_jsonl("probe_stats.jsonl", &run.statistics)?;
    let invalidated = run
        .statistics
        .is_empty()
        .then(|| "fewer than two completed paths".to_string());
    let summaries: Vec<_> = run
        .paths
        .iter()
        .map(|p| crate::single::PathSummary {
            index: p.index,
            termination: p.termination,
            final_time: p.final_time,
            steps: p.steps,
        })
        .collect();
    dir.finish(
        "ensemble",
        cfg,
        start.elapsed().as_secs_f64(),
        summaries,
        run.failures.clone(),
    )?;
    Ok(Report {
        out: out.to_path_buf(),
        invalidated,
        failures: run.failures,
    })
}
