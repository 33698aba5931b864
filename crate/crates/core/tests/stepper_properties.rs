mod common;

use common::{coeffs, relative_l2, smooth_state};
use proptest::prelude::*;
use stochflow::fields::*;
use stochflow::fluid::*;
use stochflow::noise::*;
use stochflow::stepper::*;

fn accepted(o: StepOutcome) -> State {
    match o {
        StepOutcome::Accepted(s) => s,
        StepOutcome::Rejected { min_density } => panic!("rejected at {min_density}"),
    }
}

fn axpy(q: &State, dt: f64, t: &Tendency) -> (ScalarField, VectorField) {
    (
        q.rho.lincomb(1.0, &t.rho, dt).unwrap(),
        q.momentum.lincomb(1.0, &t.momentum, dt).unwrap(),
    )
}

#[test]
fn zero_noise_steps_are_bitwise_deterministic_steps() {
    let g = Grid::uniform(2, 32).unwrap();
    let c: Vec<f64> = (0..2 * common::MODES)
        .map(|i| ((i * 7 % 5) as f64 / 3.0) - 0.6)
        .collect();
    let s = smooth_state(&g, &c);
    let p = FluidParams::navier_stokes(1.4, 1.0, 0.01, 0.01);
    let empty = NoiseCoefficients::empty(&g);
    let dt = 1e-3;
    for scheme in [Scheme::CentralSpectral, Scheme::RusanovFv] {
        let em = accepted(
            step_ito_em(
                &s,
                dt,
                &[],
                &p,
                &empty,
                &StepConfig::new(Stepper::ItoEm, scheme),
            )
            .unwrap(),
        );
        let t0 = deterministic_rhs(&s, &p, scheme).unwrap();
        let (rho, m) = axpy(&s, dt, &t0);
        assert_eq!(em.rho, rho);
        assert_eq!(em.momentum, m);

        let heun = accepted(
            step_strat_heun(
                &s,
                dt,
                &[],
                &p,
                &empty,
                &StepConfig::new(Stepper::StratHeun, scheme),
            )
            .unwrap(),
        );
        let mid = State::new(rho, m, s.time + dt).unwrap();
        let t1 = deterministic_rhs(&mid, &p, scheme).unwrap();
        let rho2: Vec<f64> = (0..g.len())
            .map(|i| s.rho.values()[i] + 0.5 * dt * (t0.rho.values()[i] + t1.rho.values()[i]))
            .collect();
        assert_eq!(heun.rho.values(), &rho2[..]);
    }
}

#[test]
fn runs_are_bitwise_reproducible() {
    let g = Grid::uniform(2, 16).unwrap();
    let c: Vec<f64> = (0..2 * common::MODES)
        .map(|i| ((i * 3 % 11) as f64 / 6.0) - 0.8)
        .collect();
    let s = smooth_state(&g, &c);
    let p = FluidParams::euler(1.4, 1.0);
    let lib = build_solenoidal_library(&g, &NoiseSpec::random(3, 2, 0.2, 8)).unwrap();
    let path = WienerPath::new(RngSeed::new(77, 2), 5e-3, 3).unwrap();
    let cfg = StepConfig::new(Stepper::StratHeun, Scheme::RusanovFv);
    let a = advance(&s, 0.2, &path, &p, &lib, &cfg).unwrap();
    let b = advance(&s, 0.2, &path, &p, &lib, &cfg).unwrap();
    assert_eq!(a, b);
    let times = &a.times;
    assert!(times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn guard_trips_on_large_velocity_gradients() {
    let g = Grid::uniform(2, 16).unwrap();
    let m = VectorField::from_fn(&g, |x| vec![5.0 * (3.0 * x[1]).sin(), 0.0]).unwrap();
    let s = State::new(ScalarField::constant(&g, 1.0), m, 0.0).unwrap();
    let p = FluidParams::euler(1.4, 1.0);
    let empty = NoiseCoefficients::empty(&g);
    let path = WienerPath::new(RngSeed::new(1, 0), 1e-3, 0).unwrap();
    let cfg = StepConfig::new(Stepper::ItoEm, Scheme::RusanovFv).with_guard(1.0);
    let rec = advance(&s, 1.0, &path, &p, &empty, &cfg).unwrap();
    match rec.termination {
        Termination::GuardTripped { time } => assert!(time > 0.0 && time < 1.0),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn near_vacuum_data_trips_the_floor() {
    let g = Grid::uniform(2, 16).unwrap();
    let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.9 * x[0].sin()).unwrap();
    // expanding flow centred on the density minimum
    let m = VectorField::from_fn(&g, |x| {
        vec![2.0 * (1.0 + 0.9 * x[0].sin()) * x[0].cos(), 0.0]
    })
    .unwrap();
    let s = State::new(rho, m, 0.0).unwrap();
    let mut p = FluidParams::euler(1.4, 1.0);
    p.density_floor = 0.09;
    let empty = NoiseCoefficients::empty(&g);
    let path = WienerPath::new(RngSeed::new(1, 0), 0.05, 0).unwrap();
    let cfg = StepConfig::new(Stepper::ItoEm, Scheme::RusanovFv);
    let rec = advance(&s, 1.0, &path, &p, &empty, &cfg).unwrap();
    assert!(
        matches!(rec.termination, Termination::FloorTripped { .. }),
        "{:?}",
        rec.termination
    );
}

#[test]
fn oversized_path_steps_are_subdivided() {
    let g = Grid::uniform(2, 16).unwrap();
    let s = smooth_state(&g, &vec![0.3; 2 * common::MODES]);
    let p = FluidParams::euler(1.4, 1.0);
    let lib = build_solenoidal_library(&g, &NoiseSpec::random(2, 2, 0.2, 1)).unwrap();
    let path = WienerPath::new(RngSeed::new(3, 0), 0.25, 2).unwrap();
    let cfg = StepConfig::new(Stepper::StratHeun, Scheme::RusanovFv);
    let rec = advance(&s, 0.5, &path, &p, &lib, &cfg).unwrap();
    assert!(rec.termination.is_completed());
    assert!((rec.final_state().time - 0.5).abs() < 1e-12);
    assert!(rec.steps.len() > 2);
    let total: Vec<f64> = (0..2)
        .map(|k| rec.steps.iter().map(|s| s.dw[k]).sum::<f64>())
        .collect();
    let coarse: Vec<f64> = (0..2)
        .map(|k| path.increment(0)[k] + path.increment(1)[k])
        .collect();
    for (a, b) in total.iter().zip(&coarse) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn euler_maruyama_self_convergence() {
    let g = Grid::uniform(2, 32).unwrap();
    let s = smooth_state(&g, &vec![0.4; 2 * common::MODES]);
    let p = FluidParams::euler(1.4, 1.0);
    let lib = build_solenoidal_library(&g, &NoiseSpec::single(&[1, 1], 0.2, 0.3)).unwrap();
    let cfg = StepConfig::new(Stepper::ItoEm, Scheme::CentralSpectral);
    let seeds = 6;
    let mut mean_sq = [0.0; 3];
    for realization in 0..seeds {
        let base = WienerPath::new(RngSeed::new(12, realization), 4e-3, 1).unwrap();
        let run = |lvl: u32| advance(&s, 0.2, &base.refined(lvl), &p, &lib, &cfg).unwrap();
        let reference = run(5);
        for (lvl, acc) in mean_sq.iter_mut().enumerate() {
            *acc += relative_l2(run(lvl as u32).final_state(), reference.final_state()).powi(2);
        }
    }
    let errs: Vec<f64> = mean_sq.iter().map(|e| (e / seeds as f64).sqrt()).collect();
    let order = (errs[0] / errs[2]).log2() / 2.0;
    // mean-square order is ½ in general; the drift error dominates at these steps
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    assert!(order >= 0.5, "order {order}, errors {errs:?}");
}

#[test]
fn ito_and_stratonovich_agree_as_dt_shrinks() {
    let g = Grid::uniform(2, 32).unwrap();
    let s = smooth_state(&g, &vec![-0.2; 2 * common::MODES]);
    let p = FluidParams::euler(1.4, 1.0);
    let lib = build_solenoidal_library(&g, &NoiseSpec::random(4, 2, 0.1, 2)).unwrap();
    let base = WienerPath::new(RngSeed::new(4, 0), 2e-3, 4).unwrap();
    let gaps: Vec<f64> = (0..3)
        .map(|lvl| {
            let path = base.refined(lvl);
            let em = advance(
                &s,
                0.1,
                &path,
                &p,
                &lib,
                &StepConfig::new(Stepper::ItoEm, Scheme::CentralSpectral),
            )
            .unwrap();
            let he = advance(
                &s,
                0.1,
                &path,
                &p,
                &lib,
                &StepConfig::new(Stepper::StratHeun, Scheme::CentralSpectral),
            )
            .unwrap();
            relative_l2(em.final_state(), he.final_state())
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn mass_and_momentum_are_conserved(c in coeffs(), seed in any::<u64>()) {
        let g = Grid::uniform(2, 32).unwrap();
        let s = smooth_state(&g, &c);
        let p = FluidParams::navier_stokes(1.4, 1.0, 0.01, 0.0);
        let lib = build_solenoidal_library(&g, &NoiseSpec::random(4, 2, 0.2, seed)).unwrap();
        let path = WienerPath::new(RngSeed::new(seed, 0), 5e-3, 4).unwrap();
        for stepper in [Stepper::ItoEm, Stepper::StratHeun] {
            for scheme in [Scheme::CentralSpectral, Scheme::RusanovFv] {
                let rec = advance(&s, 0.1, &path, &p, &lib, &StepConfig::new(stepper, scheme).with_cfl(0.2)).unwrap();
                let last = rec.final_state();
                prop_assert!((last.mass() - s.mass()).abs() <= 1e-9 * s.mass());
                if scheme == Scheme::CentralSpectral {
                    for (a, b) in last.total_momentum().iter().zip(s.total_momentum()) {
                        prop_assert!((a - b).abs() <= 1e-8);
                    }
                }
            }
        }
    }
}
