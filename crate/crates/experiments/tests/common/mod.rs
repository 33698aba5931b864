#![allow(dead_code)]

use stochflow_experiments::ScenarioConfig;

/// A small scenario; `scenario` and `initial` are TOML tables, `extra` is
/// appended at top level before them.
pub fn toml(
    n: usize,
    noise: &str,
    step: &str,
    scenario: &str,
    initial: &str,
    horizon: f64,
) -> String {
    format!(
        r#"horizon = {horizon}
seed = 7

[grid]
shape = [{n}, {n}]

[fluid]
gamma = 1.4
a = 1.0
{noise}
[step]
{step}

[scenario]
{scenario}

[initial]
{initial}
"#
    )
}

pub fn config(
    n: usize,
    noise: &str,
    step: &str,
    scenario: &str,
    initial: &str,
    horizon: f64,
) -> ScenarioConfig {
    ScenarioConfig::from_toml(&toml(n, noise, step, scenario, initial, horizon)).unwrap()
}

pub const HEUN: &str = "dt = 5e-3\nstepper = \"strat-heun\"\nscheme = \"central-spectral\"";
pub const NOISE4: &str = "[noise]\ncount = 4\nseed = 5\n";
pub const VORTEX: &str = "kind = \"vortex-pair\"\nepsilon = 0.1";
pub const CONSTANT: &str = "kind = \"constant\"\nrho = 1.2";
