mod common;

use common::{band_limited, coeffs, smooth_state};
use proptest::prelude::*;
use stochflow::diagnostics::*;
use stochflow::fields::*;
use stochflow::fluid::*;
use stochflow::noise::*;
use stochflow::stepper::*;

const SP: DerivativeMethod = DerivativeMethod::Spectral;

fn reference(g: &Grid, c: &[f64]) -> (ScalarField, VectorField) {
    let s = smooth_state(g, c);
    let p = FluidParams::euler(1.4, 1.0);
    (s.rho.clone(), velocity(&s, &p).unwrap())
}

fn perturbed(g: &Grid, c: &[f64], d: &[f64], eps: f64) -> State {
    let (r, v) = reference(g, c);
    let rho = r.lincomb(1.0, &band_limited(g, d, 0.05), eps).unwrap();
    let u = v
        .lincomb(
            1.0,
            &VectorField::new(vec![band_limited(g, d, 0.1), band_limited(g, c, 0.1)]).unwrap(),
            eps,
        )
        .unwrap();
    State::new(rho.clone(), u.scale_by(&rho).unwrap(), 0.0).unwrap()
}

#[test]
fn energy_matches_velocity_pressure_form() {
    let g = Grid::uniform(2, 32).unwrap();
    let c: Vec<f64> = (0..2 * common::MODES)
        .map(|i| (i as f64 * 0.37).sin())
        .collect();
    let s = smooth_state(&g, &c);
    let p = FluidParams::euler(1.67, 0.8);
    let u = velocity(&s, &p).unwrap();
    let pr = pressure(&s.rho, &p).unwrap();
    let kinetic = integrate(&s.rho.mul(&u.dot(&u).unwrap()).unwrap()) * 0.5;
    let internal = integrate(&pr) / (p.gamma - 1.0);
    let e = energy_ns(&s, &p).unwrap();
    assert!((e - kinetic - internal).abs() <= 1e-12 * e);
}

#[test]
fn oscillation_defect_raises_total_energy() {
    let g = Grid::uniform(2, 64).unwrap();
    let p = FluidParams::euler(1.4, 1.0);
    let rho =
        ScalarField::from_fn(&g, |x| 1.0 + 0.1 * x[0].sin() + 0.2 * (16.0 * x[1]).sin()).unwrap();
    let m =
        VectorField::from_fn(&g, |x| vec![0.3 * (16.0 * x[0]).cos(), 0.1 * x[0].cos()]).unwrap();
    let s = State::new(rho, m, 0.0).unwrap();
    let d = defect_estimate(&s, 1.0, &p).unwrap();
    let base = energy_ns(&s, &p).unwrap();
    let total = energy_euler_total(&s, &d, &p).unwrap();
    // ½·(0.3²/2)·|T²| of kinetic oscillation energy is resolved below scale 1
    let expected_kinetic = 0.25 * 0.09 * 0.5 * (2.0 * std::f64::consts::PI).powi(2);
    assert!(total > base);
    assert!(0.5 * d.conv_trace_integral() > 0.5 * expected_kinetic);
    assert!(d.press_integral() > 0.0);
}

#[test]
fn mollification_gap_decays_quadratically() {
    let g = Grid::uniform(2, 128).unwrap();
    let p = FluidParams::euler(1.4, 1.0);
    let c: Vec<f64> = (0..2 * common::MODES)
        .map(|i| (i as f64 * 1.3).cos())
        .collect();
    let s = smooth_state(&g, &c);
    let gap = |l: f64| {
        let d = defect_estimate(&s, l, &p).unwrap();
        (d.conv_trace_integral(), d.press_integral())
    };
    let (c1, p1) = gap(0.1);
    let (c2, p2) = gap(0.05);
    assert!((c1 / c2 - 4.0).abs() < 0.3, "{}", c1 / c2);
    assert!((p1 / p2 - 4.0).abs() < 0.3, "{}", p1 / p2);
}

#[test]
fn ledger_envelope_dominates_a_gronwall_history() {
    let times: Vec<f64> = (0..=200).map(|i| i as f64 * 0.005).collect();
    let k: Vec<f64> = times.iter().map(|t| 0.1 * (0.8 * t).exp()).collect();
    let q: Vec<f64> = k.iter().map(|v| 0.8 * v).collect();
    let c = vec![1.0; times.len()];
    let led = RelativeEnergyLedger::from_series(times.clone(), k.clone(), q, c).unwrap();
    assert!(led.epsilon < 1e-5);
    assert!(led.max_excess() <= 0.0);
    assert_eq!(led.c_r, 1.0);

    let bumped: Vec<f64> = k.iter().zip(&times).map(|(v, t)| v + 0.01 * t).collect();
    let q = vec![0.0; times.len()];
    let c = vec![0.5; times.len()];
    let led = RelativeEnergyLedger::from_series(times, bumped.clone(), q, c).unwrap();
    assert!(led.epsilon > 0.0);
    assert!(led.envelope.iter().zip(&bumped).all(|(e, v)| e >= v));
}

fn at_rest_run(stepper: Stepper) -> (TrajectoryRecord, NoiseCoefficients) {
    let g = Grid::uniform(2, 16).unwrap();
    let s = State::at_rest(&g, 1.3);
    let p = FluidParams::navier_stokes(1.4, 1.0, 0.01, 0.01);
    let lib = build_solenoidal_library(&g, &NoiseSpec::random(4, 2, 0.3, 9)).unwrap();
    let path = WienerPath::new(RngSeed::new(2, 0), 1e-2, 4).unwrap();
    let rec = advance(
        &s,
        0.3,
        &path,
        &p,
        &lib,
        &StepConfig::new(stepper, Scheme::CentralSpectral),
    )
    .unwrap();
    (rec, lib)
}

#[test]
fn constant_trajectory_has_vanishing_residuals() {
    let p = FluidParams::navier_stokes(1.4, 1.0, 0.01, 0.01);
    for stepper in [Stepper::ItoEm, Stepper::StratHeun] {
        let (rec, lib) = at_rest_run(stepper);
        let g = lib.grid().clone();
        assert!(rec.states.iter().all(|s| s.rho == rec.states[0].rho));
        let phi = ScalarField::from_fn(&g, |x| (x[0] + 2.0 * x[1]).sin()).unwrap();
        let m1 = weak_residual_continuity(&rec, &phi, &lib).unwrap();
        assert!(m1.residual.iter().all(|r| r.abs() < 1e-12));
        let vphi = VectorField::from_fn(&g, |x| vec![x[1].cos(), (x[0] - x[1]).sin()]).unwrap();
        let m2 = weak_residual_momentum(
            &rec,
            &vphi,
            DefectPolicy::Zero,
            &lib,
            &p,
            Scheme::CentralSpectral,
        )
        .unwrap();
        assert!(
            m2.residual.iter().all(|r| r.abs() < 1e-12),
            "{:?}",
            m2.residual
        );
    }
}

fn noisy_run(
    stepper: Stepper,
    scheme: Scheme,
) -> (TrajectoryRecord, NoiseCoefficients, FluidParams) {
    let g = Grid::uniform(2, 32).unwrap();
    let c: Vec<f64> = (0..2 * common::MODES)
        .map(|i| (i as f64 * 0.71).sin())
        .collect();
    let s = smooth_state(&g, &c);
    let p = FluidParams::navier_stokes(1.4, 1.0, 0.01, 0.005);
    let lib = build_solenoidal_library(&g, &NoiseSpec::random(4, 2, 0.2, 3)).unwrap();
    let path = WienerPath::new(RngSeed::new(6, 1), 2e-3, 4).unwrap();
    let rec = advance(&s, 0.1, &path, &p, &lib, &StepConfig::new(stepper, scheme)).unwrap();
    (rec, lib, p)
}

#[test]
fn conserved_test_functions_give_zero_residual() {
    for scheme in [Scheme::CentralSpectral, Scheme::RusanovFv] {
        let (rec, lib, p) = noisy_run(Stepper::StratHeun, scheme);
        let g = lib.grid().clone();
        let m1 = weak_residual_continuity(&rec, &ScalarField::constant(&g, 1.0), &lib).unwrap();
        let mass = rec.states[0].mass();
        assert!(m1.residual.iter().all(|r| r.abs() < 1e-10 * mass));
        if scheme == Scheme::CentralSpectral {
            let m2 = weak_residual_momentum(
                &rec,
                &VectorField::constant(&g, &[1.0, -2.0]),
                DefectPolicy::Zero,
                &lib,
                &p,
                scheme,
            )
            .unwrap();
            assert!(
                m2.residual.iter().all(|r| r.abs() < 1e-10),
                "{:?}",
                m2.final_residual()
            );
        }
    }
}

#[test]
fn euler_maruyama_residual_is_the_discrete_ito_sum() {
    let (rec, lib, p) = noisy_run(Stepper::ItoEm, Scheme::CentralSpectral);
    let g = lib.grid().clone();
    let phi = ScalarField::from_fn(&g, |x| (x[0] - x[1]).cos() + 0.3 * (2.0 * x[1]).sin()).unwrap();
    let vphi =
        VectorField::from_fn(&g, |x| vec![(x[0] + x[1]).sin(), 0.5 * (2.0 * x[0]).cos()]).unwrap();
    let m1 = weak_residual_continuity(&rec, &phi, &lib).unwrap();
    let m2 = weak_residual_momentum(
        &rec,
        &vphi,
        DefectPolicy::Zero,
        &lib,
        &p,
        Scheme::CentralSpectral,
    )
    .unwrap();
    for probe in [&m1, &m2] {
        let scale = probe.final_predicted_qv().sqrt();
        for (j, step) in rec.steps.iter().enumerate() {
            let ito: f64 = probe.loadings[j]
                .iter()
                .zip(&step.dw)
                .map(|(a, w)| a * w)
                .sum();
            let dm = probe.residual[j + 1] - probe.residual[j];
            assert!(
                (dm + ito).abs() < 1e-9 * scale,
                "step {j}: {dm} vs {}",
                -ito
            );
        }
    }
}

#[test]
fn brownian_quadratic_variation() {
    let n = 10_000;
    for seed in 0..100 {
        let path = WienerPath::new(RngSeed::new(seed, 0), 1.0 / n as f64, 2).unwrap();
        let mut w = [vec![0.0], vec![0.0]];
        for j in 0..n {
            let dw = path.increment(j as u64);
            for k in 0..2 {
                let last = *w[k].last().unwrap();
                w[k].push(last + dw[k]);
            }
        }
        let qv = *empirical_quadratic_variation(&w[0])
            .unwrap()
            .last()
            .unwrap();
        assert!((0.9..=1.1).contains(&qv), "seed {seed}: {qv}");
        let cross = *empirical_cross_variation(&w[0], &w[1])
            .unwrap()
            .last()
            .unwrap();
        assert!(
            cross.abs() < 5.0 / (n as f64).sqrt(),
            "seed {seed}: {cross}"
        );
    }
}

#[test]
fn max_principle_holds_along_a_compressive_run() {
    let g = Grid::uniform(2, 32).unwrap();
    let p = FluidParams::euler(1.4, 1.0);
    let m = VectorField::from_fn(&g, |x| vec![0.3 * x[0].sin(), 0.2 * x[1].cos()]).unwrap();
    let s = State::new(ScalarField::constant(&g, 1.0), m, 0.0).unwrap();
    let path = WienerPath::new(RngSeed::new(0, 0), 2e-3, 0).unwrap();
    let empty = NoiseCoefficients::empty(&g);
    let rec = advance(
        &s,
        0.5,
        &path,
        &p,
        &empty,
        &StepConfig::new(Stepper::StratHeun, Scheme::CentralSpectral),
    )
    .unwrap();
    let rep = max_principle_bounds(&rec.states, &p, SP, 1e-3).unwrap();
    assert!(!rep.violated, "{}", rep.max_violation);
    assert!(rep.observed_max.last().unwrap() > &1.01);

    let mut forged = rec.states.clone();
    let last = forged.last_mut().unwrap();
    last.rho = last.rho.map(|r| 2.0 * r);
    last.momentum = last
        .momentum
        .scale_by(&ScalarField::constant(&g, 2.0))
        .unwrap();
    assert!(
        max_principle_bounds(&forged, &p, SP, 1e-3)
            .unwrap()
            .violated
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn relative_energy_is_nonnegative(c in coeffs(), d in coeffs(), eps in -2.0f64..2.0) {
        let g = Grid::uniform(2, 16).unwrap();
        let p = FluidParams::euler(1.4, 1.0);
        let (r, v) = reference(&g, &c);
        let s = perturbed(&g, &c, &d, eps);
        let k = relative_energy(&s, &r, &v, None, &p).unwrap();
        prop_assert!(k >= 0.0);
        if eps.abs() > 1e-3 && d.iter().any(|x| x.abs() > 1e-2) {
            prop_assert!(k > 0.0);
        }
        let same = State::new(r.clone(), v.scale_by(&r).unwrap(), 0.0).unwrap();
        prop_assert!(relative_energy(&same, &r, &v, None, &p).unwrap().abs() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rate_is_controlled_by_gronwall_constant(c in coeffs(), d in coeffs(), eps in -2.0f64..2.0, l in 0.5f64..1.5) {
        let g = Grid::uniform(2, 32).unwrap();
        let p = FluidParams::euler(1.4, 1.0);
        let (r, v) = reference(&g, &c);
        let s = perturbed(&g, &c, &d, eps);
        let defect = defect_estimate(&s, l, &p).unwrap();
        let k = relative_energy(&s, &r, &v, Some(&defect), &p).unwrap();
        let q = relative_energy_rate(&s, &r, &v, Some(&defect), &p, SP).unwrap();
        let cr = gronwall_rate(&v, &p, SP).unwrap();
        prop_assert!(q.abs() <= cr * k * (1.0 + 1e-10) + 1e-14, "{} > {}", q.abs(), cr * k);
    }

    #[test]
    fn noise_cancellations_hold(c in coeffs(), d in coeffs(), seed in any::<u64>(), gamma in 1.1f64..3.0) {
        let g = Grid::uniform(2, 32).unwrap();
        let p = FluidParams::euler(gamma, 1.0);
        let (r, v) = reference(&g, &c);
        let s = perturbed(&g, &c, &d, 0.7);
        let lib = build_solenoidal_library(&g, &NoiseSpec::random(3, 3, 0.5, seed)).unwrap();
        for sigma in lib.sigmas() {
            let res = cancellation_residuals(&s, &r, &v, sigma, &p).unwrap();
            for x in res {
                prop_assert!(x.abs() <= 1e-8, "{res:?}");
            }
        }
    }

    #[test]
    fn defects_are_nonnegative(c in coeffs(), d in coeffs(), eps in -3.0f64..3.0, l in 0.4f64..2.0) {
        let g = Grid::uniform(2, 32).unwrap();
        let p = FluidParams::euler(1.4, 1.0);
        let s = perturbed(&g, &c, &d, eps);
        let est = defect_estimate(&s, l, &p).unwrap();
        prop_assert!(est.min_press() >= -1e-12);
        prop_assert!(est.min_conv_eigenvalue() >= -1e-12);
    }
}
