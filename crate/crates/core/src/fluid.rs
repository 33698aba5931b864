//! Constitutive laws and deterministic right-hand sides of the isentropic
//! system.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fields::{
    gradient_tensor, integrate, DerivativeMethod, Grid, ScalarField, TensorField, VectorField,
};
use crate::sum::compensated_sum;

fn default_floor() -> f64 {
    1e-8
}

/// `p = a ρ^γ`, viscosities `μ, λ`. `μ = λ = 0` is the inviscid system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidParams {
    pub gamma: f64,
    pub a: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_floor")]
    pub density_floor: f64,
}

impl FluidParams {
    pub fn euler(gamma: f64, a: f64) -> Self {
        Self {
            gamma,
            a,
            mu: 0.0,
            lambda: 0.0,
            density_floor: default_floor(),
        }
    }

    pub fn navier_stokes(gamma: f64, a: f64, mu: f64, lambda: f64) -> Self {
        Self {
            mu,
            lambda,
            ..Self::euler(gamma, a)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 1.0) {
            return Err(invalid(
                "gamma",
                format!("must exceed 1, got {}", self.gamma),
            ));
        }
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(invalid("a", format!("must be positive, got {}", self.a)));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(invalid(
                "mu",
                format!("must be nonnegative, got {}", self.mu),
            ));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(invalid(
                "lambda",
                format!("must be nonnegative, got {}", self.lambda),
            ));
        }
        if !(self.density_floor.is_finite() && self.density_floor > 0.0) {
            return Err(invalid("density_floor", "must be positive"));
        }
        Ok(())
    }

    pub fn is_inviscid(&self) -> bool {
        self.mu == 0.0 && self.lambda == 0.0
    }

    pub fn pressure_at(&self, rho: f64) -> f64 {
        self.a * rho.powf(self.gamma)
    }

    pub fn sound_speed_at(&self, rho: f64) -> f64 {
        (self.gamma * self.a * rho.powf(self.gamma - 1.0)).sqrt()
    }

    /// `P(z) = a z^γ/(γ−1)` without the sign check.
    pub(crate) fn potential_at(&self, z: f64) -> f64 {
        self.a * z.powf(self.gamma) / (self.gamma - 1.0)
    }

    /// `P′(z) = aγ z^{γ−1}/(γ−1)`.
    pub fn potential_derivative(&self, z: f64) -> f64 {
        self.a * self.gamma * z.powf(self.gamma - 1.0) / (self.gamma - 1.0)
    }

    /// `P″(z) = aγ z^{γ−2}`.
    pub fn potential_second_derivative(&self, z: f64) -> f64 {
        self.a * self.gamma * z.powf(self.gamma - 2.0)
    }
}

/// Spatial discretization of the deterministic fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    CentralSpectral,
    RusanovFv,
}

impl Scheme {
    /// Derivative backend consistent with the scheme's viscous operator.
    pub fn derivative_method(self) -> DerivativeMethod {
        match self {
            Scheme::CentralSpectral => DerivativeMethod::Spectral,
            Scheme::RusanovFv => DerivativeMethod::CentralDifference,
        }
    }
}

/// Density, momentum and time.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub rho: ScalarField,
    pub momentum: VectorField,
    pub time: f64,
}

impl State {
    pub fn new(rho: ScalarField, momentum: VectorField, time: f64) -> Result<Self> {
        rho.grid().check_same(momentum.grid())?;
        rho.ensure_finite("density")?;
        momentum.ensure_finite("momentum")?;
        if !(time.is_finite() && time >= 0.0) {
            return Err(invalid("time", "must be finite and nonnegative"));
        }
        Ok(Self {
            rho,
            momentum,
            time,
        })
    }

    /// `ρ ≡ rho`, `m ≡ 0`.
    pub fn at_rest(grid: &Grid, rho: f64) -> Self {
        Self {
            rho: ScalarField::constant(grid, rho),
            momentum: VectorField::zeros(grid),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }

    pub fn check_floor(&self, params: &FluidParams) -> Result<()> {
        let min = self.rho.min();
        if min < params.density_floor {
            Err(Error::DensityFloor {
                min,
                floor: params.density_floor,
            })
        } else {
            Ok(())
        }
    }

    pub fn mass(&self) -> f64 {
        integrate(&self.rho)
    }

    pub fn total_momentum(&self) -> Vec<f64> {
        self.momentum.integral()
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.momentum.is_finite()
    }
}

/// `a ρ^γ` pointwise.
pub fn pressure(rho: &ScalarField, params: &FluidParams) -> Result<ScalarField> {
    if let Some(&v) = rho.values().iter().find(|&&v| v < 0.0) {
        return Err(Error::Negative(v));
    }
    Ok(rho.map(|r| params.pressure_at(r)))
}

/// `P(z) = a z^γ/(γ−1)`.
pub fn pressure_potential(z: f64, params: &FluidParams) -> Result<f64> {
    if z < 0.0 {
        return Err(Error::Negative(z));
    }
    Ok(params.potential_at(z))
}

/// `u = m/ρ`.
pub fn velocity(state: &State, params: &FluidParams) -> Result<VectorField> {
    state.check_floor(params)?;
    Ok(velocity_unchecked(state))
}

pub(crate) fn velocity_unchecked(state: &State) -> VectorField {
    let rho = state.rho.values();
    let comps = state
        .momentum
        .components()
        .iter()
        .map(|c| c.values().iter().zip(rho).map(|(m, r)| m / r).collect())
        .collect();
    VectorField::from_raw(state.grid(), comps)
}

/// `𝕊 = μ(∇u + ∇uᵀ) + λ (div u) 𝕀`.
pub fn viscous_stress(grad_u: &TensorField, params: &FluidParams) -> TensorField {
    let grid = grad_u.grid();
    let d = grid.dim();
    let div = grad_u.trace();
    let comps = (0..d * d)
        .map(|k| {
            let (i, j) = (k / d, k % d);
            let a = grad_u.get(i, j).values();
            let b = grad_u.get(j, i).values();
            let vals = if i == j {
                a.iter()
                    .zip(b)
                    .zip(div.values())
                    .map(|((x, y), t)| params.mu * (x + y) + params.lambda * t)
                    .collect()
            } else {
                a.iter().zip(b).map(|(x, y)| params.mu * (x + y)).collect()
            };
            ScalarField::from_raw(grid, vals)
        })
        .collect();
    TensorField::new(comps).expect("shape preserved")
}

/// `∫ 𝕊(∇u):∇u dx`, with the gradient taken by the scheme's viscous backend.
pub fn dissipation_rate(state: &State, params: &FluidParams, scheme: Scheme) -> Result<f64> {
    if params.is_inviscid() {
        return Ok(0.0);
    }
    let u = velocity(state, params)?;
    let grad = gradient_tensor(&u, scheme.derivative_method())?;
    let s = viscous_stress(&grad, params);
    Ok(integrate(&s.contract(&grad)?))
}

/// Time derivative of `(ρ, m)` from the deterministic fluxes.
#[derive(Debug, Clone, PartialEq)]
pub struct Tendency {
    pub rho: ScalarField,
    pub momentum: VectorField,
}

/// `(−div m, −div(m⊗u) − ∇p + div 𝕊(∇u))`.
pub fn deterministic_rhs(state: &State, params: &FluidParams, scheme: Scheme) -> Result<Tendency> {
    state.check_floor(params)?;
    let (rho, momentum) = match scheme {
        Scheme::CentralSpectral => spectral_rhs(state, params),
        Scheme::RusanovFv => rusanov_rhs(state, params),
    };
    let grid = state.grid();
    let t = Tendency {
        rho: ScalarField::from_raw(grid, rho),
        momentum: VectorField::from_raw(grid, momentum),
    };
    t.rho.ensure_finite("density tendency")?;
    t.momentum.ensure_finite("momentum tendency")?;
    Ok(t)
}

fn spectral_rhs(state: &State, params: &FluidParams) -> (Vec<f64>, Vec<Vec<f64>>) {
    let grid = state.grid();
    let dim = grid.dim();
    let u = velocity_unchecked(state);
    let m = &state.momentum;
    let viscous = !params.is_inviscid();

    let mut inputs: Vec<Vec<f64>> = Vec::new();
    for c in m.components() {
        inputs.push(c.values().to_vec());
    }
    // symmetric momentum flux m_i u_j, i ≤ j
    let mut pair_index = vec![0usize; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            pair_index[i * dim + j] = inputs.len();
            pair_index[j * dim + i] = inputs.len();
            let mi = m.component(i).values();
            let uj = u.component(j).values();
            inputs.push(mi.iter().zip(uj).map(|(a, b)| a * b).collect());
        }
    }
    let p_index = inputs.len();
    inputs.push(
        state
            .rho
            .values()
            .iter()
            .map(|&r| params.pressure_at(r))
            .collect(),
    );
    let u_index = inputs.len();
    if viscous {
        for c in u.components() {
            inputs.push(c.values().to_vec());
        }
    }
    let slices: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    let (mu, mu_lambda) = (params.mu, params.mu + params.lambda);
    let i_times = |k: f64, z: Complex64| Complex64::new(-k * z.im, k * z.re);
    let mut out = grid
        .spectral()
        .linear_map(&slices, 1 + dim, true, |_, k, ins, outs| {
            let mut div_m = Complex64::new(0.0, 0.0);
            for d in 0..dim {
                div_m += i_times(k[d], ins[d]);
            }
            outs[0] = -div_m;
            let (k_sq, k_dot_u) = if viscous {
                let k_sq: f64 = (0..dim).map(|d| k[d] * k[d]).sum();
                let kdu: Complex64 = (0..dim).map(|d| ins[u_index + d] * k[d]).sum();
                (k_sq, kdu)
            } else {
                (0.0, Complex64::new(0.0, 0.0))
            };
            for i in 0..dim {
                let mut acc = -i_times(k[i], ins[p_index]);
                for j in 0..dim {
                    acc -= i_times(k[j], ins[pair_index[i * dim + j]]);
                }
                if viscous {
                    acc -= ins[u_index + i] * (mu * k_sq);
                    acc -= k_dot_u * (mu_lambda * k[i]);
                }
                outs[1 + i] = acc;
            }
        })
        .into_iter();
    let rho = out.next().unwrap();
    (rho, out.collect())
}

fn rusanov_rhs(state: &State, params: &FluidParams) -> (Vec<f64>, Vec<Vec<f64>>) {
    let grid = state.grid();
    let dim = grid.dim();
    let n = grid.len();
    let rho = state.rho.values();
    let m: Vec<&[f64]> = state
        .momentum
        .components()
        .iter()
        .map(|c| c.values())
        .collect();
    let u: Vec<Vec<f64>> = m
        .iter()
        .map(|c| c.iter().zip(rho).map(|(a, r)| a / r).collect())
        .collect();
    let p: Vec<f64> = rho.iter().map(|&r| params.pressure_at(r)).collect();
    let cs: Vec<f64> = rho.iter().map(|&r| params.sound_speed_at(r)).collect();

    let mut d_rho = vec![0.0; n];
    let mut d_m = vec![vec![0.0; n]; dim];
    let mut flux = vec![vec![0.0; n]; 1 + dim];
    for axis in 0..dim {
        let inv_h = 1.0 / grid.spacing(axis);
        for i in 0..n {
            let r = grid.neighbour(i, axis, 1);
            let s = (u[axis][i].abs() + cs[i]).max(u[axis][r].abs() + cs[r]);
            flux[0][i] = 0.5 * (m[axis][i] + m[axis][r]) - 0.5 * s * (rho[r] - rho[i]);
            for c in 0..dim {
                let mut fl = m[c][i] * u[axis][i];
                let mut fr = m[c][r] * u[axis][r];
                if c == axis {
                    fl += p[i];
                    fr += p[r];
                }
                flux[1 + c][i] = 0.5 * (fl + fr) - 0.5 * s * (m[c][r] - m[c][i]);
            }
        }
        for i in 0..n {
            let l = grid.neighbour(i, axis, -1);
            d_rho[i] -= (flux[0][i] - flux[0][l]) * inv_h;
            for c in 0..dim {
                d_m[c][i] -= (flux[1 + c][i] - flux[1 + c][l]) * inv_h;
            }
        }
    }
    if !params.is_inviscid() {
        let visc = central_viscous(grid, &u, params);
        for (dm, v) in d_m.iter_mut().zip(visc) {
            for (a, b) in dm.iter_mut().zip(v) {
                *a += b;
            }
        }
    }
    (d_rho, d_m)
}

/// `div 𝕊(∇u)` with centred differences for both derivatives.
fn central_viscous(grid: &Grid, u: &[Vec<f64>], params: &FluidParams) -> Vec<Vec<f64>> {
    let dim = grid.dim();
    let n = grid.len();
    let cd = |f: &[f64], axis: usize| -> Vec<f64> {
        let inv = 0.5 / grid.spacing(axis);
        (0..n)
            .map(|i| (f[grid.neighbour(i, axis, 1)] - f[grid.neighbour(i, axis, -1)]) * inv)
            .collect()
    };
    let grad: Vec<Vec<Vec<f64>>> = u
        .iter()
        .map(|c| (0..dim).map(|d| cd(c, d)).collect())
        .collect();
    let div: Vec<f64> = (0..n)
        .map(|i| (0..dim).map(|d| grad[d][d][i]).sum())
        .collect();
    (0..dim)
        .map(|i| {
            let mut out = vec![0.0; n];
            for j in 0..dim {
                let s: Vec<f64> = (0..n)
                    .map(|x| {
                        let mut v = params.mu * (grad[i][j][x] + grad[j][i][x]);
                        if i == j {
                            v += params.lambda * div[x];
                        }
                        v
                    })
                    .collect();
                for (o, x) in out.iter_mut().zip(cd(&s, j)) {
                    *o += x;
                }
            }
            out
        })
        .collect()
}

/// `∫ (∂E/∂ρ) dρ + (∂E/∂m)·dm` for `E = |m|²/(2ρ) + P(ρ)`.
pub fn energy_production(state: &State, tendency: &Tendency, params: &FluidParams) -> Result<f64> {
    let u = velocity(state, params)?;
    let grid = state.grid();
    let rho = state.rho.values();
    let terms = (0..grid.len()).map(|i| {
        let mut u_sq = 0.0;
        let mut u_dm = 0.0;
        for d in 0..grid.dim() {
            let ui = u.component(d).values()[i];
            u_sq += ui * ui;
            u_dm += ui * tendency.momentum.component(d).values()[i];
        }
        (params.potential_derivative(rho[i]) - 0.5 * u_sq) * tendency.rho.values()[i] + u_dm
    });
    Ok(grid.cell_volume() * compensated_sum(terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::uniform(2, n).unwrap()
    }

    fn smooth_state(g: &Grid) -> State {
        let rho = ScalarField::from_fn(g, |x| 1.0 + 0.2 * x[0].sin() * x[1].cos()).unwrap();
        let m = VectorField::from_fn(g, |x| {
            vec![
                0.3 * x[1].sin() + 0.1 * (2.0 * x[0]).cos(),
                -0.2 * x[0].cos(),
            ]
        })
        .unwrap();
        State::new(rho, m, 0.0).unwrap()
    }

    #[test]
    fn pressure_examples() {
        let g = grid(8);
        let p = pressure(
            &ScalarField::constant(&g, 2.0),
            &FluidParams::euler(2.0, 1.0),
        )
        .unwrap();
        assert!(p.values().iter().all(|&v| v == 4.0));
        let p = pressure(
            &ScalarField::constant(&g, 8.0),
            &FluidParams::euler(5.0 / 3.0, 0.5),
        )
        .unwrap();
        assert!(p.values().iter().all(|&v| (v - 16.0).abs() < 1e-12));
        assert!(pressure(
            &ScalarField::constant(&g, -1.0),
            &FluidParams::euler(2.0, 1.0)
        )
        .is_err());
    }

    #[test]
    fn potential_examples() {
        let p = FluidParams::euler(2.0, 1.0);
        assert_eq!(pressure_potential(0.0, &p).unwrap(), 0.0);
        assert_eq!(pressure_potential(3.0, &p).unwrap(), 9.0);
        assert!(pressure_potential(-1.0, &p).is_err());
    }

    #[test]
    fn velocity_examples() {
        let g = grid(8);
        let p = FluidParams::euler(2.0, 1.0);
        let s = State::new(
            ScalarField::constant(&g, 2.0),
            VectorField::constant(&g, &[4.0, 0.0]),
            0.0,
        )
        .unwrap();
        let u = velocity(&s, &p).unwrap();
        assert!(u.component(0).values().iter().all(|&v| v == 2.0));
        assert!(u.component(1).values().iter().all(|&v| v == 0.0));
        let bad = State::at_rest(&g, 1e-10);
        assert!(matches!(
            velocity(&bad, &p),
            Err(Error::DensityFloor { .. })
        ));
    }

    #[test]
    fn shear_stress() {
        let g = grid(32);
        let u = VectorField::from_fn(&g, |x| vec![x[1].sin(), 0.0]).unwrap();
        let grad = gradient_tensor(&u, DerivativeMethod::Spectral).unwrap();
        let s = viscous_stress(&grad, &FluidParams::navier_stokes(2.0, 1.0, 1.0, 0.0));
        let expect = ScalarField::from_fn(&g, |x| x[1].cos()).unwrap();
        assert!(s.get(0, 1).max_diff(&expect).unwrap() < 1e-12);
        assert!(s.get(1, 0).max_diff(&expect).unwrap() < 1e-12);
        assert!(s.trace().max_abs() < 1e-12);
        assert_eq!(s.max_diff(&s.transpose()).unwrap(), 0.0);
    }

    #[test]
    fn constant_state_has_zero_tendency() {
        let g = grid(16);
        let s = State::at_rest(&g, 1.7);
        for scheme in [Scheme::CentralSpectral, Scheme::RusanovFv] {
            let p = FluidParams::navier_stokes(1.4, 1.0, 0.1, 0.05);
            let t = deterministic_rhs(&s, &p, scheme).unwrap();
            assert!(t.rho.max_abs() <= 1e-12);
            assert!(t.momentum.max_magnitude() <= 1e-12);
        }
    }

    #[test]
    fn acoustic_linearization() {
        let g = grid(64);
        let eps = 1e-6;
        let (gamma, a, rho0) = (1.4, 1.0, 1.3);
        let p = FluidParams::euler(gamma, a);
        let rho = ScalarField::from_fn(&g, |x| rho0 + eps * x[0].sin()).unwrap();
        let s = State::new(rho, VectorField::zeros(&g), 0.0).unwrap();
        let t = deterministic_rhs(&s, &p, Scheme::CentralSpectral).unwrap();
        let coeff = eps * gamma * a * rho0.powf(gamma - 1.0);
        let expect = ScalarField::from_fn(&g, |x| -coeff * x[0].cos()).unwrap();
        assert!(t.momentum.component(0).max_diff(&expect).unwrap() < 10.0 * eps * eps);
    }

    #[test]
    fn conservation_and_energy_structure() {
        let g = grid(64);
        let s = smooth_state(&g);
        let p = FluidParams::euler(1.4, 1.0);
        let t = deterministic_rhs(&s, &p, Scheme::CentralSpectral).unwrap();
        assert!(integrate(&t.rho).abs() < 1e-10);
        for c in t.momentum.components() {
            assert!(integrate(c).abs() < 1e-10);
        }
        assert!(energy_production(&s, &t, &p).unwrap().abs() < 1e-8);
        let t = deterministic_rhs(&s, &p, Scheme::RusanovFv).unwrap();
        assert!(integrate(&t.rho).abs() < 1e-10);
        assert!(energy_production(&s, &t, &p).unwrap() <= 0.0);
    }

    #[test]
    fn viscous_work_matches_dissipation() {
        let g = grid(32);
        let s = smooth_state(&g);
        let p = FluidParams::navier_stokes(1.4, 1.0, 0.05, 0.02);
        let ideal = FluidParams::euler(1.4, 1.0);
        for scheme in [Scheme::CentralSpectral, Scheme::RusanovFv] {
            let full = deterministic_rhs(&s, &p, scheme).unwrap();
            let inv = deterministic_rhs(&s, &ideal, scheme).unwrap();
            let u = velocity(&s, &p).unwrap();
            let visc = full.momentum.lincomb(1.0, &inv.momentum, -1.0).unwrap();
            let work = integrate(&u.dot(&visc).unwrap());
            let diss = dissipation_rate(&s, &p, scheme).unwrap();
            assert!(diss > 0.0);
            assert!((work + diss).abs() < 1e-12 * diss.max(1.0), "{scheme:?}");
        }
    }
}
