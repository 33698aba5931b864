mod common;

use common::{coeffs, smooth_state};
use proptest::prelude::*;
use stochflow::fields::*;
use stochflow::fluid::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pressure_matches_log_exp_oracle(c in coeffs()) {
        let g = Grid::uniform(2, 16).unwrap();
        let s = smooth_state(&g, &c);
        let params = FluidParams::euler(1.4, 1.0);
        let p = pressure(&s.rho, &params).unwrap();
        for (pv, r) in p.values().iter().zip(s.rho.values()) {
            let oracle = (1.4 * r.ln()).exp();
            prop_assert!((pv - oracle).abs() <= 1e-13 * oracle);
        }
    }

    #[test]
    fn pressure_potential_is_convex(pairs in prop::collection::vec((0.0f64..5.0, 0.01f64..5.0), 1000), gamma in 1.05f64..3.0) {
        let params = FluidParams::euler(gamma, 0.7);
        for (x, y) in pairs {
            let gap = pressure_potential(x, &params).unwrap()
                - pressure_potential(y, &params).unwrap()
                - params.potential_derivative(y) * (x - y);
            prop_assert!(gap >= -1e-12 * (1.0 + pressure_potential(x.max(y), &params).unwrap()));
        }
    }

    #[test]
    fn velocity_round_trip(c in coeffs()) {
        let g = Grid::uniform(2, 16).unwrap();
        let s = smooth_state(&g, &c);
        let u = velocity(&s, &FluidParams::euler(1.4, 1.0)).unwrap();
        let back = u.scale_by(&s.rho).unwrap();
        for (a, b) in back.components().iter().zip(s.momentum.components()) {
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() <= 1e-13 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn stress_is_symmetric(c in coeffs(), mu in 0.0f64..1.0, lambda in 0.0f64..1.0) {
        let g = Grid::uniform(2, 16).unwrap();
        let s = smooth_state(&g, &c);
        let params = FluidParams::navier_stokes(1.4, 1.0, mu, lambda);
        let grad = gradient_tensor(&velocity(&s, &params).unwrap(), DerivativeMethod::Spectral).unwrap();
        let st = viscous_stress(&grad, &params);
        prop_assert!(st.max_diff(&st.transpose()).unwrap() <= 1e-13);
    }

    #[test]
    fn discrete_conservation_and_energy_structure(c in coeffs()) {
        let g = Grid::uniform(2, 64).unwrap();
        let s = smooth_state(&g, &c);
        let params = FluidParams::euler(1.4, 1.0);
        let t = deterministic_rhs(&s, &params, Scheme::CentralSpectral).unwrap();
        prop_assert!(integrate(&t.rho).abs() <= 1e-10);
        for m in t.momentum.components() {
            prop_assert!(integrate(m).abs() <= 1e-10);
        }
        prop_assert!(energy_production(&s, &t, &params).unwrap().abs() <= 1e-8);
        let t = deterministic_rhs(&s, &params, Scheme::RusanovFv).unwrap();
        prop_assert!(integrate(&t.rho).abs() <= 1e-10);
        prop_assert!(energy_production(&s, &t, &params).unwrap() <= 0.0);
    }
}
