//! Invariant self-test: fast versions of the property checks that need no
//! external fixture, one pass/fail line each.

use std::f64::consts::PI;

use stochflow::diagnostics::{
    cancellation_residuals, defect_estimate, relative_energy, weak_residual_continuity,
    EnergyLedger,
};
use stochflow::fields::{
    divergence, gradient, integrate, negative_sobolev_norm, DerivativeMethod, Grid, ScalarField,
    VectorField,
};
use stochflow::fluid::{velocity, FluidParams, Scheme, State};
use stochflow::noise::{
    build_solenoidal_library, NoiseCoefficients, NoiseSpec, RngSeed, WienerPath,
};
use stochflow::stepper::{advance, advance_observed, StepConfig, Stepper};

/// Faults the self-test can be asked to inject, to show that the matching
/// check fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Replaces the noise library by a gradient (curl-free) field.
    NonSolenoidalNoise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

type Check = fn(Option<Fault>) -> stochflow::Result<(bool, String)>;

const SP: DerivativeMethod = DerivativeMethod::Spectral;

fn grid() -> Grid {
    Grid::uniform(2, 32).expect("valid grid")
}

fn state(g: &Grid) -> stochflow::Result<State> {
    let rho = ScalarField::from_fn(g, |x| 1.0 + 0.1 * x[0].sin() + 0.05 * (x[0] + x[1]).cos())?;
    let u = VectorField::from_fn(g, |x| {
        vec![
            0.2 * x[0].sin() * x[1].cos(),
            -0.2 * x[0].cos() * x[1].sin() + 0.05,
        ]
    })?;
    State::new(rho.clone(), u.scale_by(&rho)?, 0.0)
}

fn library(g: &Grid, fault: Option<Fault>) -> stochflow::Result<NoiseCoefficients> {
    match fault {
        Some(Fault::NonSolenoidalNoise) => {
            let f = gradient(&ScalarField::from_fn(g, |x| 0.1 * (x[0] + x[1]).sin())?, SP)?;
            NoiseCoefficients::from_fields(g, vec![f])
        }
        None => build_solenoidal_library(g, &NoiseSpec::random(4, 2, 0.2, 17)),
    }
}

fn solenoidal_noise(fault: Option<Fault>) -> stochflow::Result<(bool, String)> {
    let lib = library(&grid(), fault)?;
    let worst = lib.max_divergence()?;
    let scale = lib.max_sup_norm().max(1.0);
    Ok((worst <= 1e-10 * scale, format!("max |div σ| = {worst:e}")))
}

fn constant_state(_: Option<Fault>) -> stochflow::Result<(bool, String)> {
    let g = grid();
    let lib = library(&g, None)?;
    let s = State::at_rest(&g, 1.3);
    let p = FluidParams::euler(1.4, 1.0);
    let path = WienerPath::new(RngSeed::new(1, 0), 1e-2, lib.len())?;
    let mut ok = true;
    for stepper in [Stepper::ItoEm, Stepper::StratHeun] {
        let rec = advance(
            &s,
            1.0,
            &path,
            &p,
            &lib,
            &StepConfig::new(stepper, Scheme::CentralSpectral),
        )?;
        let last = rec.final_state();
        ok &= last.rho == s.rho && last.momentum == s.momentum;
    }
    Ok((ok, "100 steps per stepper".into()))
}

fn conservation(_: Option<Fault>) -> stochflow::Result<(bool, String)> {
    let g = grid();
    let lib = library(&g, None)?;
    let s = state(&g)?;
    let p = FluidParams::navier_stokes(1.4, 1.0, 0.01, 0.01);
    let path = WienerPath::new(RngSeed::new(2, 0), 5e-3, lib.len())?;
    let rec = advance(
        &s,
        0.2,
        &path,
        &p,
        &lib,
        &StepConfig::new(Stepper::StratHeun, Scheme::CentralSpectral),
    )?;
    let last = rec.final_state();
    let dm = (last.mass() - s.mass()).abs() / s.mass();
    let dp = last
        .total_momentum()
        .iter()
        .zip(s.total_momentum())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((
        dm <= 1e-9 && dp <= 1e-8,
        format!("mass {dm:e}, momentum {dp:e}"),
    ))
}

fn energy_budget(_: Option<Fault>) -> stochflow::Result<(bool, String)> {
    let g = grid();
    let lib = library(&g, None)?;
    let s = state(&g)?;
    let p = FluidParams::navier_stokes(1.4, 1.0, 0.01, 0.01);
    let path = WienerPath::new(RngSeed::new(3, 0), 2e-3, lib.len())?;
    let mut ledger = EnergyLedger::new(&s, &p, Scheme::CentralSpectral)?;
    let mut failed = None;
    advance_observed(
        &s,
        0.1,
        &path,
        &p,
        &lib,
        &StepConfig::new(Stepper::StratHeun, Scheme::CentralSpectral),
        |ev| {
            if let Err(e) = ledger.observe(ev, true) {
                failed = Some(e);
            }
        },
    )?;
    if let Some(e) = failed {
        return Err(e);
    }
    let worst = ledger.max_budget_residual() / ledger.initial_energy();
    Ok((worst <= 5e-3, format!("max residual / E0 = {worst:e}")))
}

fn sobolev_norm(_: Option<Fault>) -> stochflow::Result<(bool, String)> {
    let g = grid();
    let f = ScalarField::from_fn(&g, |x| x[0].sin())?;
    let got = negative_sobolev_norm(&f, 4)?;
    let expect = (2.0 * PI * PI).sqrt() / 4.0;
    let err = (got - expect).abs() / expect;
    Ok((err < 1e-12, format!("relative error {err:e}")))
}

fn integration_by_parts(_: Option<Fault>) -> stochflow::Result<(bool, String)> {
    let g = grid();
    let s = state(&g)?;
    let f = s.rho.map(|r| r * r);
    let lhs = integrate(&f.mul(&divergence(&s.momentum, SP)?)?);
    let rhs = -integrate(&s.momentum.dot(&gradient(&f, SP)?)?);
    let err = (lhs - rhs).abs();
    Ok((err < 1e-10, format!("|∫f div m + ∫m·∇f| = {err:e}")))
}

fn wiener_refinement(_: Option<Fault>) -> stochflow::Result<(bool, String)> {
    let coarse = WienerPath::new(RngSeed::new(4, 1), 0.1, 3)?;
    let fine = coarse.refined(3);
    let mut worst = 0.0_f64;
    for j in 0..10u64 {
        let c = coarse.increment(j);
        for k in 0..3 {
            let sum: f64 = (0..8).map(|i| fine.increment(8 * j + i)[k]).sum();
            worst = worst.max((sum - c[k]).abs());
        }
    }
    Ok((worst < 1e-14, format!("max bridge mismatch {worst:e}")))
}

fn relative_energy_sign(_: Option<Fault>) -> stochflow::Result<(bool, String)> {
    let g = grid();
    let s = state(&g)?;
    let p = FluidParams::euler(1.4, 1.0);
    let v = velocity(&s, &p)?;
    let same = relative_energy(&s, &s.rho, &v, None, &p)?;
    let mut min = f64::INFINITY;
    for i in 1..=20 {
        let eps = 0.05 * i as f64;
        let r = s.rho.map(|x| x * (1.0 + 0.3 * eps));
        let w = VectorField::from_fn(&g, |x| vec![eps * x[1].cos(), 0.0])?.lincomb(1.0, &v, 1.0)?;
        min = min.min(relative_energy(&s, &r, &w, None, &p)?);
    }
    Ok((
        same.abs() < 1e-13 && min > 0.0,
        format!("coincident {same:e}, min perturbed {min:e}"),
    ))
}

fn defect_sign(_: Option<Fault>) -> stochflow::Result<(bool, String)> {
    let g = grid();
    let s = state(&g)?;
    let p = FluidParams::euler(1.4, 1.0);
    let d = defect_estimate(&s, 0.5, &p)?;
    let (a, b) = (d.min_press(), d.min_conv_eigenvalue());
    Ok((
        a >= -1e-12 && b >= -1e-10,
        format!("min R_press {a:e}, min eig R_conv {b:e}"),
    ))
}

fn cancellations(_: Option<Fault>) -> stochflow::Result<(bool, String)> {
    let g = grid();
    let s = state(&g)?;
    let p = FluidParams::euler(1.4, 1.0);
    let r = ScalarField::from_fn(&g, |x| 1.0 + 0.2 * (x[0] - x[1]).cos())?;
    let v = VectorField::from_fn(&g, |x| vec![0.3 * x[1].sin(), 0.1 * x[0].cos()])?;
    let lib = library(&g, None)?;
    let mut worst = 0.0_f64;
    for sigma in lib.sigmas() {
        for x in cancellation_residuals(&s, &r, &v, sigma, &p)? {
            worst = worst.max(x.abs());
        }
    }
    Ok((worst <= 1e-8, format!("max residual {worst:e}")))
}

fn martingale_exactness(_: Option<Fault>) -> stochflow::Result<(bool, String)> {
    let g = grid();
    let lib = library(&g, None)?;
    let s = state(&g)?;
    let p = FluidParams::euler(1.4, 1.0);
    let path = WienerPath::new(RngSeed::new(5, 0), 2e-3, lib.len())?;
    let rec = advance(
        &s,
        0.05,
        &path,
        &p,
        &lib,
        &StepConfig::new(Stepper::ItoEm, Scheme::CentralSpectral),
    )?;
    let phi = ScalarField::from_fn(&g, |x| x[0].sin())?;
    let m = weak_residual_continuity(&rec, &phi, &lib)?;
    let mut worst = 0.0_f64;
    for (j, step) in rec.steps.iter().enumerate() {
        let ito: f64 = m.loadings[j].iter().zip(&step.dw).map(|(a, w)| a * w).sum();
        worst = worst.max((m.residual[j + 1] - m.residual[j] + ito).abs());
    }
    let scale = m.final_predicted_qv().sqrt().max(1e-300);
    Ok((
        worst <= 1e-9 * scale,
        format!("max |ΔM + Σa ΔW| = {worst:e}"),
    ))
}

fn determinism(_: Option<Fault>) -> stochflow::Result<(bool, String)> {
    let g = grid();
    let lib = library(&g, None)?;
    let s = state(&g)?;
    let p = FluidParams::euler(1.4, 1.0);
    let path = WienerPath::new(RngSeed::new(6, 0), 5e-3, lib.len())?;
    let cfg = StepConfig::new(Stepper::StratHeun, Scheme::RusanovFv);
    let a = advance(&s, 0.05, &path, &p, &lib, &cfg)?;
    let b = advance(&s, 0.05, &path, &p, &lib, &cfg)?;
    Ok((a == b, "two identical runs".into()))
}

const CHECKS: [(&str, Check); 12] = [
    ("solenoidal-noise", solenoidal_noise),
    ("constant-state-invariance", constant_state),
    ("mass-momentum-conservation", conservation),
    ("viscous-energy-budget", energy_budget),
    ("negative-sobolev-norm", sobolev_norm),
    ("integration-by-parts", integration_by_parts),
    ("wiener-bridge-consistency", wiener_refinement),
    ("relative-energy-sign", relative_energy_sign),
    ("defect-nonnegativity", defect_sign),
    ("noise-cancellations", cancellations),
    ("martingale-ito-sum", martingale_exactness),
    ("determinism", determinism),
];

/// Runs every check; `fault` injects a defect for the matching check.
pub fn selftest(fault: Option<Fault>) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, check)| match check(fault) {
            Ok((passed, detail)) => CheckResult {
                name,
                passed,
                detail,
            },
            Err(e) => CheckResult {
                name,
                passed: false,
                detail: e.to_string(),
            },
        })
        .collect()
}
