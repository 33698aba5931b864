mod common;

use common::*;
use stochflow_experiments::config::{InitialCondition, ScenarioKind};
use stochflow_experiments::{ExperimentError, ScenarioConfig};

fn field_of(err: ExperimentError) -> String {
    match err {
        ExperimentError::Config { field, .. } => field,
        other => panic!("expected a field error, got {other}"),
    }
}

#[test]
fn parses_with_defaults() {
    let cfg = config(16, NOISE4, HEUN, "kind = \"single\"", VORTEX, 0.1);
    assert_eq!(cfg.stride, 1);
    assert_eq!(cfg.step.cfl, 0.4);
    assert_eq!(cfg.step.max_halvings, 8);
    assert_eq!(cfg.noise.amplitude, 0.05);
    assert_eq!(cfg.noise.max_wavenumber, 2);
    assert_eq!(cfg.fluid.mu, 0.0);
    assert_eq!(cfg.scenario, ScenarioKind::Single {});
    assert!(
        matches!(cfg.initial, InitialCondition::VortexPair { velocity, .. } if velocity == 0.2)
    );
    let echoed = serde_json::to_value(&cfg).unwrap();
    assert_eq!(echoed["noise"]["decay"], 2.0);
    assert_eq!(echoed["fluid"]["density_floor"], 1e-8);
}

#[test]
fn unknown_keys_are_rejected() {
    let good = toml(16, "", HEUN, "kind = \"single\"", CONSTANT, 0.1);
    for (from, to) in [
        ("gamma = 1.4", "gamma = 1.4\ngama = 1.4"),
        ("horizon", "horizn = 1.0\nhorizon"),
        ("kind = \"constant\"", "kind = \"constant\"\nvelocity = 1.0"),
        ("kind = \"single\"", "kind = \"single\"\npaths = 3"),
    ] {
        let bad = good.replace(from, to);
        assert!(
            matches!(
                ScenarioConfig::from_toml(&bad),
                Err(ExperimentError::Parse(_))
            ),
            "{to}"
        );
    }
    assert!(ScenarioConfig::from_toml(&good).is_ok());
}

#[test]
fn invalid_values_name_their_field() {
    let cases = [
        (
            toml(4, "", HEUN, "kind = \"single\"", CONSTANT, 0.1),
            "grid.shape",
        ),
        (
            toml(16, "", HEUN, "kind = \"single\"", CONSTANT, -1.0),
            "horizon",
        ),
        (
            toml(
                16,
                "",
                HEUN,
                "kind = \"ensemble\"\npaths = 1",
                CONSTANT,
                0.1,
            ),
            "scenario.paths",
        ),
        (
            toml(
                16,
                "[noise]\ncount = 2\nmax_wavenumber = 8\n",
                HEUN,
                "kind = \"single\"",
                CONSTANT,
                0.1,
            ),
            "noise.max_wavenumber",
        ),
        (
            toml(
                16,
                "",
                HEUN,
                "kind = \"viscosity-sweep\"\nmu = [0.1, 0.2]",
                CONSTANT,
                0.1,
            ),
            "scenario.mu",
        ),
        (
            toml(16, "", HEUN, "kind = \"weak-strong\"", CONSTANT, 0.1),
            "step.guard",
        ),
        (
            toml(
                16,
                "",
                HEUN,
                "kind = \"single\"",
                "kind = \"constant\"\nrho = -1.0",
                0.1,
            ),
            "initial.rho",
        ),
        (
            toml(
                16,
                "",
                HEUN,
                "kind = \"single\"",
                "kind = \"acoustic-mode\"\nepsilon = 0.1\nwave_vector = [0, 0]",
                0.1,
            ),
            "initial.wave_vector",
        ),
        (
            toml(
                16,
                "",
                HEUN,
                "kind = \"single\"",
                "kind = \"two-scale-oscillatory\"\namplitude = 1.0\nfrequency = 8",
                0.1,
            ),
            "initial.frequency",
        ),
        (
            toml(
                16,
                "",
                &HEUN.replace("5e-3", "0.0"),
                "kind = \"single\"",
                CONSTANT,
                0.1,
            ),
            "step.dt",
        ),
    ];
    for (text, field) in cases {
        let err = ScenarioConfig::from_toml(&text).unwrap_err();
        assert_eq!(field_of(err), field);
    }
    let fluid = toml(16, "", HEUN, "kind = \"single\"", CONSTANT, 0.1)
        .replace("gamma = 1.4", "gamma = 0.9");
    assert_eq!(
        field_of(ScenarioConfig::from_toml(&fluid).unwrap_err()),
        "fluid"
    );
}
