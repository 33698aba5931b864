use serde::Serialize;

use crate::diagnostics::defect::DefectEstimate;
use crate::diagnostics::{cumulative_trapezoid, symmetric_eigenvalues};
use crate::error::{invalid, Error, Result};
use crate::fields::{
    divergence, gradient, gradient_tensor, integrate, DerivativeMethod, ScalarField, VectorField,
};
use crate::fluid::{FluidParams, State};
use crate::sum::compensated_sum;

fn check_reference(
    state: &State,
    r: &ScalarField,
    v: &VectorField,
    params: &FluidParams,
) -> Result<()> {
    state.grid().check_same(r.grid())?;
    state.grid().check_same(v.grid())?;
    state.check_floor(params)?;
    let min = r.min();
    if min < params.density_floor {
        return Err(Error::DensityFloor {
            min,
            floor: params.density_floor,
        });
    }
    Ok(())
}

fn defect_energy(defect: Option<&DefectEstimate>, params: &FluidParams) -> f64 {
    defect.map_or(0.0, |d| {
        0.5 * d.conv_trace_integral() + d.press_integral() / (params.gamma - 1.0)
    })
}

/// `𝒦 = ∫ ½ρ|u − v|² + ∫ (P(ρ) − P(r) − P′(r)(ρ − r)) + ½∫tr R_conv
/// + 1/(γ−1)∫R_press`.
pub fn relative_energy(
    state: &State,
    r: &ScalarField,
    v: &VectorField,
    defect: Option<&DefectEstimate>,
    params: &FluidParams,
) -> Result<f64> {
    check_reference(state, r, v, params)?;
    let grid = state.grid();
    let rho = state.rho.values();
    let rr = r.values();
    let terms = (0..grid.len()).map(|i| {
        let mut kin = 0.0;
        for d in 0..grid.dim() {
            let w = state.momentum.component(d).values()[i] - rho[i] * v.component(d).values()[i];
            kin += w * w;
        }
        let bregman = params.potential_at(rho[i])
            - params.potential_at(rr[i])
            - params.potential_derivative(rr[i]) * (rho[i] - rr[i]);
        0.5 * kin / rho[i] + bregman
    });
    Ok(grid.cell_volume() * compensated_sum(terms) + defect_energy(defect, params))
}

/// `Q = −∫ρ (u−v)·∇v (u−v) − ∫(p(ρ) − p(r) − p′(r)(ρ−r)) div v
/// − ∫∇v:R_conv − ∫div v R_press`.
pub fn relative_energy_rate(
    state: &State,
    r: &ScalarField,
    v: &VectorField,
    defect: Option<&DefectEstimate>,
    params: &FluidParams,
    method: DerivativeMethod,
) -> Result<f64> {
    check_reference(state, r, v, params)?;
    let grid = state.grid();
    let dim = grid.dim();
    let grad_v = gradient_tensor(v, method)?;
    let div_v = grad_v.trace();
    let rho = state.rho.values();
    let rr = r.values();
    let dp = |z: f64| params.a * params.gamma * z.powf(params.gamma - 1.0);
    let terms = (0..grid.len()).map(|x| {
        let w: Vec<f64> = (0..dim)
            .map(|d| state.momentum.component(d).values()[x] / rho[x] - v.component(d).values()[x])
            .collect();
        let mut conv = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                conv += w[i] * grad_v.get(i, j).values()[x] * w[j];
            }
        }
        let bregman =
            params.pressure_at(rho[x]) - params.pressure_at(rr[x]) - dp(rr[x]) * (rho[x] - rr[x]);
        let mut t = -rho[x] * conv - bregman * div_v.values()[x];
        if let Some(d) = defect {
            for i in 0..dim {
                for j in 0..dim {
                    t -= grad_v.get(i, j).values()[x] * d.conv.get(i, j).values()[x];
                }
            }
            t -= div_v.values()[x] * d.press.values()[x];
        }
        t
    });
    Ok(grid.cell_volume() * compensated_sum(terms))
}

/// `c = max(2‖sym ∇v‖_{op,∞}, (γ−1)‖div v‖_∞)`, which satisfies `|Q| ≤ c 𝒦`
/// whenever the defects are nonnegative.
pub fn gronwall_rate(
    v: &VectorField,
    params: &FluidParams,
    method: DerivativeMethod,
) -> Result<f64> {
    let grad = gradient_tensor(v, method)?;
    let dim = v.dim();
    let mut op = 0.0_f64;
    for x in 0..v.grid().len() {
        let g = grad.at(x);
        let sym: Vec<f64> = (0..dim * dim)
            .map(|k| 0.5 * (g[k] + g[(k % dim) * dim + k / dim]))
            .collect();
        let e = symmetric_eigenvalues(&sym, dim);
        op = op.max(e[0].abs()).max(e[dim - 1].abs());
    }
    let div = grad.trace().max_abs();
    Ok((2.0 * op).max((params.gamma - 1.0) * div))
}

/// Relative-energy history with its integrated rate and Gronwall envelope
/// `(𝒦(0) + ε) e^{c_R t}`, where `c_R = sup c(t)` and
/// `ε = max(0, sup_t [𝒦(t) − 𝒦(0) − ∫₀ᵗ Q])` absorbs the discrepancy
/// between the recorded 𝒦 and its deterministic rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelativeEnergyLedger {
    pub times: Vec<f64>,
    pub relative_energy: Vec<f64>,
    pub rate: Vec<f64>,
    pub gronwall_rate: Vec<f64>,
    pub rate_integral: Vec<f64>,
    pub epsilon: f64,
    pub c_r: f64,
    pub envelope: Vec<f64>,
}

impl RelativeEnergyLedger {
    pub fn from_series(times: Vec<f64>, k: Vec<f64>, q: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let n = times.len();
        if n == 0 || k.len() != n || q.len() != n || c.len() != n {
            return Err(invalid(
                "series",
                "times, 𝒦, Q and c must have equal nonzero length",
            ));
        }
        let rate_integral = cumulative_trapezoid(&times, &q);
        let epsilon = k
            .iter()
            .zip(&rate_integral)
            .map(|(ki, qi)| ki - k[0] - qi)
            .fold(0.0_f64, f64::max);
        let c_r = c.iter().cloned().fold(0.0_f64, f64::max);
        let t0 = times[0];
        let envelope = times
            .iter()
            .map(|t| (k[0] + epsilon) * (c_r * (t - t0)).exp())
            .collect();
        Ok(Self {
            times,
            relative_energy: k,
            rate: q,
            gronwall_rate: c,
            rate_integral,
            epsilon,
            c_r,
            envelope,
        })
    }

    /// `max_t (𝒦(t) − envelope(t))`; nonpositive when the bound holds.
    pub fn max_excess(&self) -> f64 {
        self.relative_energy
            .iter()
            .zip(&self.envelope)
            .map(|(k, e)| k - e)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup(&self) -> f64 {
        self.relative_energy.iter().cloned().fold(0.0, f64::max)
    }
}

/// Residuals of the four noise cancellation identities for one coefficient
/// `σ` (spectral calculus):
///
/// 1. `∫v·div(m⊗σ) + ∫m·(σ·∇)v`
/// 2. `∫ρ v·(σ·∇)v − ½∫ρ σ·∇|v|²`
/// 3. `∫r σ·∇p′(r)`
/// 4. `−∫ρ σ·∇P′(r) + ∫ρ P″(r) σ·∇r`
pub fn cancellation_residuals(
    state: &State,
    r: &ScalarField,
    v: &VectorField,
    sigma: &VectorField,
    params: &FluidParams,
) -> Result<[f64; 4]> {
    check_reference(state, r, v, params)?;
    state.grid().check_same(sigma.grid())?;
    let sp = DerivativeMethod::Spectral;
    let dim = state.grid().dim();
    let m = &state.momentum;
    let rho = &state.rho;

    let mut m1 = 0.0;
    let grad_v = gradient_tensor(v, sp)?;
    for i in 0..dim {
        let flux = sigma.scale_by(m.component(i))?;
        m1 += integrate(&v.component(i).mul(&divergence(&flux, sp)?)?);
        let mut sgv = ScalarField::zeros(state.grid());
        for j in 0..dim {
            sgv = sgv.lincomb(1.0, &sigma.component(j).mul(grad_v.get(i, j))?, 1.0)?;
        }
        m1 += integrate(&m.component(i).mul(&sgv)?);
    }

    let mut conv = ScalarField::zeros(state.grid());
    for i in 0..dim {
        let mut sgv = ScalarField::zeros(state.grid());
        for j in 0..dim {
            sgv = sgv.lincomb(1.0, &sigma.component(j).mul(grad_v.get(i, j))?, 1.0)?;
        }
        conv = conv.lincomb(1.0, &v.component(i).mul(&sgv)?, 1.0)?;
    }
    let v_sq = v.dot(v)?;
    let along = sigma.dot(&gradient(&v_sq, sp)?)?;
    let m2 = integrate(&rho.mul(&conv)?) - 0.5 * integrate(&rho.mul(&along)?);

    let dp = r.map(|z| params.a * params.gamma * z.powf(params.gamma - 1.0));
    let m3 = integrate(&r.mul(&sigma.dot(&gradient(&dp, sp)?)?)?);

    let dpot = r.map(|z| params.potential_derivative(z));
    let ddpot = r.map(|z| params.potential_second_derivative(z));
    let a = integrate(&rho.mul(&sigma.dot(&gradient(&dpot, sp)?)?)?);
    let b = integrate(&rho.mul(&ddpot)?.mul(&sigma.dot(&gradient(r, sp)?)?)?);
    Ok([m1, m2, m3, -a + b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    fn reference(g: &Grid) -> (ScalarField, VectorField) {
        let r = ScalarField::from_fn(g, |x| 1.0 + 0.2 * (x[0] + x[1]).cos()).unwrap();
        let v = VectorField::from_fn(g, |x| vec![0.3 * x[1].sin(), 0.2 * x[0].cos()]).unwrap();
        (r, v)
    }

    #[test]
    fn coincident_state_has_zero_relative_energy_and_rate() {
        let g = Grid::uniform(2, 32).unwrap();
        let p = FluidParams::euler(1.4, 1.0);
        let (r, v) = reference(&g);
        let s = State::new(r.clone(), v.scale_by(&r).unwrap(), 0.0).unwrap();
        assert!(relative_energy(&s, &r, &v, None, &p).unwrap().abs() < 1e-12);
        let q = relative_energy_rate(&s, &r, &v, None, &p, DerivativeMethod::Spectral).unwrap();
        assert!(q.abs() < 1e-12);
    }

    #[test]
    fn velocity_perturbation_is_kinetic_only() {
        let g = Grid::uniform(2, 32).unwrap();
        let p = FluidParams::euler(1.4, 1.0);
        let (r, v) = reference(&g);
        let w = VectorField::from_fn(&g, |x| vec![0.1 * x[0].cos(), -0.05]).unwrap();
        let m = v.lincomb(1.0, &w, 1.0).unwrap().scale_by(&r).unwrap();
        let s = State::new(r.clone(), m, 0.0).unwrap();
        let expect = 0.5 * integrate(&r.mul(&w.dot(&w).unwrap()).unwrap());
        let k = relative_energy(&s, &r, &v, None, &p).unwrap();
        assert!((k - expect).abs() < 1e-12 * expect.max(1.0));
    }

    #[test]
    fn zero_reference_velocity_has_zero_rate() {
        let g = Grid::uniform(2, 16).unwrap();
        let p = FluidParams::euler(1.4, 1.0);
        let r = ScalarField::constant(&g, 1.0);
        let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.3 * x[0].sin()).unwrap();
        let m = VectorField::from_fn(&g, |x| vec![x[1].cos(), 0.1]).unwrap();
        let s = State::new(rho, m, 0.0).unwrap();
        let v = VectorField::zeros(&g);
        let q = relative_energy_rate(&s, &r, &v, None, &p, DerivativeMethod::Spectral).unwrap();
        assert_eq!(q, 0.0);
    }

    #[test]
    fn ledger_envelope() {
        let t = vec![0.0, 0.5, 1.0];
        let led = RelativeEnergyLedger::from_series(
            t,
            vec![1.0, 1.2, 1.1],
            vec![0.0, 0.0, 0.0],
            vec![0.1, 0.2, 0.1],
        )
        .unwrap();
        assert!((led.epsilon - 0.2).abs() < 1e-15);
        assert_eq!(led.c_r, 0.2);
        assert!(led.max_excess() <= 0.0);
    }
}
