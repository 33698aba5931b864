use serde::Serialize;

use crate::diagnostics::cumulative_trapezoid;
use crate::error::{invalid, Result};
use crate::fields::{divergence, DerivativeMethod};
use crate::fluid::{velocity, FluidParams, State};

/// Continuity-equation density bounds
/// `r_min(0) e^{−∫‖div v‖_∞} ≤ r(t) ≤ r_max(0) e^{∫‖div v‖_∞}` along a
/// reference trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxPrincipleReport {
    pub times: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub observed_min: Vec<f64>,
    pub observed_max: Vec<f64>,
    /// Largest relative excursion outside the envelope (0 when inside).
    pub max_violation: f64,
    pub violated: bool,
}

/// Evaluates the bounds on recorded reference states `(r, r v)`. `tolerance`
/// is the relative excursion tolerated before flagging a violation.
pub fn max_principle_bounds(
    states: &[State],
    params: &FluidParams,
    method: DerivativeMethod,
    tolerance: f64,
) -> Result<MaxPrincipleReport> {
    if states.is_empty() {
        return Err(invalid("states", "empty trajectory"));
    }
    let times: Vec<f64> = states.iter().map(|s| s.time).collect();
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("states", "times must be strictly increasing"));
    }
    let div_sup = states
        .iter()
        .map(|s| Ok(divergence(&velocity(s, params)?, method)?.max_abs()))
        .collect::<Result<Vec<f64>>>()?;
    let growth = cumulative_trapezoid(&times, &div_sup);
    let (r0_min, r0_max) = (states[0].rho.min(), states[0].rho.max());
    let lower: Vec<f64> = growth.iter().map(|g| r0_min * (-g).exp()).collect();
    let upper: Vec<f64> = growth.iter().map(|g| r0_max * g.exp()).collect();
    let observed_min: Vec<f64> = states.iter().map(|s| s.rho.min()).collect();
    let observed_max: Vec<f64> = states.iter().map(|s| s.rho.max()).collect();
    let mut max_violation = 0.0_f64;
    for i in 0..states.len() {
        max_violation = max_violation
            .max((lower[i] - observed_min[i]) / lower[i])
            .max((observed_max[i] - upper[i]) / upper[i]);
    }
    Ok(MaxPrincipleReport {
        times,
        lower,
        upper,
        observed_min,
        observed_max,
        max_violation,
        violated: max_violation > tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Grid, ScalarField, VectorField};

    #[test]
    fn incompressible_constant_density_sits_on_the_bounds() {
        let g = Grid::uniform(2, 16).unwrap();
        let p = FluidParams::euler(1.4, 1.0);
        let m = VectorField::from_fn(&g, |x| vec![x[1].sin(), x[0].cos()]).unwrap();
        let states: Vec<State> = (0..3)
            .map(|i| State::new(ScalarField::constant(&g, 1.5), m.clone(), i as f64 * 0.1).unwrap())
            .collect();
        let rep = max_principle_bounds(&states, &p, DerivativeMethod::Spectral, 1e-12).unwrap();
        assert!(!rep.violated);
        for i in 0..3 {
            assert!((rep.lower[i] - 1.5).abs() < 1e-12);
            assert!((rep.upper[i] - 1.5).abs() < 1e-12);
        }
    }
}
