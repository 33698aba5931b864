//! Solenoidal transport-noise coefficients, reproducible Wiener paths and the
//! Itô–Stratonovich correction drifts.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fields::{
    divergence, gradient, spectral_divergences, spectral_gradients, DerivativeMethod, Grid,
    ScalarField, VectorField,
};

fn default_max_wavenumber() -> u32 {
    2
}

fn default_amplitude() -> f64 {
    0.05
}

fn default_decay() -> f64 {
    2.0
}

/// One explicitly requested noise mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub wave_vector: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
    /// 3D only: direction of the vector potential; projected onto the plane
    /// orthogonal to the wave vector.
    #[serde(default)]
    pub polarization: Option<[f64; 3]>,
}

/// Recipe for a coefficient library: `count` randomly drawn modes with
/// amplitude `amplitude·|ξ|^{-decay}` plus any explicit `modes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub count: usize,
    #[serde(default = "default_max_wavenumber")]
    pub max_wavenumber: u32,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_decay")]
    pub decay: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub modes: Vec<ModeSpec>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            count: 0,
            max_wavenumber: default_max_wavenumber(),
            amplitude: default_amplitude(),
            decay: default_decay(),
            seed: 0,
            modes: Vec::new(),
        }
    }
}

impl NoiseSpec {
    /// No noise at all.
    pub fn none() -> Self {
        Self::default()
    }

    pub fn random(count: usize, max_wavenumber: u32, amplitude: f64, seed: u64) -> Self {
        Self {
            count,
            max_wavenumber,
            amplitude,
            seed,
            ..Self::default()
        }
    }

    pub fn single(wave_vector: &[i64], amplitude: f64, phase: f64) -> Self {
        Self {
            modes: vec![ModeSpec {
                wave_vector: wave_vector.to_vec(),
                amplitude,
                phase,
                polarization: None,
            }],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count > 0 && self.max_wavenumber == 0 {
            return Err(invalid("max_wavenumber", "must be at least 1"));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(invalid("amplitude", "must be finite and nonnegative"));
        }
        if !self.decay.is_finite() {
            return Err(invalid("decay", "must be finite"));
        }
        for m in &self.modes {
            if !(m.amplitude.is_finite() && m.phase.is_finite()) {
                return Err(invalid("modes", "amplitude and phase must be finite"));
            }
            if m.wave_vector.iter().all(|&c| c == 0) {
                return Err(invalid("modes", "wave vector must be nonzero"));
            }
        }
        Ok(())
    }
}

/// Metadata of a constructed single-mode coefficient
/// `σ = A cos(ξ·x + θ) p` with `p ⊥ ξ`, `|p| = |ξ|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseMode {
    pub wave_vector: Vec<i64>,
    pub amplitude: f64,
    pub phase: f64,
    pub polarization: Vec<f64>,
}

/// The library `(σ_k)_{k=1}^K` together with derived quantities the steppers
/// need repeatedly.
#[derive(Debug, Clone)]
pub struct NoiseCoefficients {
    grid: Grid,
    sigmas: Vec<VectorField>,
    modes: Vec<Option<NoiseMode>>,
    sup_norms: Vec<f64>,
    /// `Σ_k σ_k ⊗ σ_k`, row-major, physical space.
    second_moment: Vec<Vec<f64>>,
}

fn half_space_representative(xi: &[i64]) -> bool {
    xi.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

fn candidate_modes(dim: usize, max: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut xi = vec![-max; dim];
    loop {
        if half_space_representative(&xi) {
            out.push(xi.clone());
        }
        let mut d = dim;
        loop {
            if d == 0 {
                out.sort_by_key(|v| (v.iter().map(|c| c * c).sum::<i64>(), v.clone()));
                return out;
            }
            d -= 1;
            xi[d] += 1;
            if xi[d] <= max {
                break;
            }
            xi[d] = -max;
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn polarization(xi: &[i64], hint: Option<[f64; 3]>, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let xf: Vec<f64> = xi.iter().map(|&c| c as f64).collect();
    if xi.len() == 2 {
        return Ok(vec![-xf[1], xf[0]]);
    }
    let e = match hint {
        Some(e) => e,
        None => {
            let mut e = [0.0; 3];
            for c in e.iter_mut() {
                *c = StandardNormal.sample(rng);
            }
            e
        }
    };
    let xn = norm(&xf);
    let along = (0..3).map(|d| e[d] * xf[d]).sum::<f64>() / (xn * xn);
    let perp: Vec<f64> = (0..3).map(|d| e[d] - along * xf[d]).collect();
    let pn = norm(&perp);
    if pn < 1e-12 {
        return Err(invalid("polarization", "parallel to the wave vector"));
    }
    let perp: Vec<f64> = perp.iter().map(|c| c / pn).collect();
    // ξ × e
    Ok(vec![
        xf[1] * perp[2] - xf[2] * perp[1],
        xf[2] * perp[0] - xf[0] * perp[2],
        xf[0] * perp[1] - xf[1] * perp[0],
    ])
}

/// Builds the coefficient library described by `spec` on `grid`.
///
/// In 2D each field is `A ∇^⊥ sin(ξ·x + θ) = A cos(ξ·x + θ)(−ξ₂, ξ₁)`; in 3D it
/// is `A curl(e sin(ξ·x + θ)) = A cos(ξ·x + θ) ξ × e` for a unit `e ⊥ ξ`. Both
/// are exactly divergence-free single Fourier modes.
pub fn build_solenoidal_library(grid: &Grid, spec: &NoiseSpec) -> Result<NoiseCoefficients> {
    spec.validate()?;
    let dim = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut requested: Vec<(Vec<i64>, f64, f64, Option<[f64; 3]>)> = Vec::new();
    if spec.count > 0 {
        let mut pool = candidate_modes(dim, spec.max_wavenumber as i64);
        pool.shuffle(&mut rng);
        for i in 0..spec.count {
            let xi = pool[i % pool.len()].clone();
            let len = norm(&xi.iter().map(|&c| c as f64).collect::<Vec<_>>());
            let amp = spec.amplitude * len.powf(-spec.decay);
            let phase = rng.random::<f64>() * 2.0 * PI;
            requested.push((xi, amp, phase, None));
        }
    }
    for m in &spec.modes {
        requested.push((m.wave_vector.clone(), m.amplitude, m.phase, m.polarization));
    }

    let mut modes = Vec::with_capacity(requested.len());
    let mut sigmas = Vec::with_capacity(requested.len());
    for (xi, amp, phase, hint) in requested {
        if xi.len() != dim {
            return Err(invalid(
                "wave_vector",
                format!("expected {dim} components, got {}", xi.len()),
            ));
        }
        if xi
            .iter()
            .zip(grid.shape())
            .any(|(&c, &n)| 2 * c.unsigned_abs() as usize >= n)
        {
            return Err(Error::BeyondNyquist {
                wave_vector: xi,
                shape: grid.shape().to_vec(),
            });
        }
        let pol = polarization(&xi, hint, &mut rng)?;
        let xf: Vec<f64> = xi.iter().map(|&c| c as f64).collect();
        let field = VectorField::from_fn(grid, |x| {
            let arg: f64 = (0..dim).map(|d| xf[d] * x[d]).sum::<f64>() + phase;
            let c = amp * arg.cos();
            pol.iter().map(|p| c * p).collect()
        })?;
        sigmas.push(field);
        modes.push(Some(NoiseMode {
            wave_vector: xi,
            amplitude: amp,
            phase,
            polarization: pol,
        }));
    }
    let sup_norms = modes
        .iter()
        .map(|m| {
            let m = m.as_ref().unwrap();
            m.amplitude.abs() * norm(&m.polarization)
        })
        .collect();
    Ok(NoiseCoefficients::assemble(grid, sigmas, modes, sup_norms))
}

impl NoiseCoefficients {
    fn assemble(
        grid: &Grid,
        sigmas: Vec<VectorField>,
        modes: Vec<Option<NoiseMode>>,
        sup_norms: Vec<f64>,
    ) -> Self {
        let dim = grid.dim();
        let mut second_moment = vec![vec![0.0; grid.len()]; dim * dim];
        for s in &sigmas {
            for i in 0..dim {
                for j in 0..dim {
                    let (a, b) = (s.component(i).values(), s.component(j).values());
                    for ((o, x), y) in second_moment[i * dim + j].iter_mut().zip(a).zip(b) {
                        *o += x * y;
                    }
                }
            }
        }
        Self {
            grid: grid.clone(),
            sigmas,
            modes,
            sup_norms,
            second_moment,
        }
    }

    /// The empty library on `grid`.
    pub fn empty(grid: &Grid) -> Self {
        Self::assemble(grid, Vec::new(), Vec::new(), Vec::new())
    }

    /// Wraps arbitrary user-supplied fields without checking solenoidality.
    /// Sup norms are the grid maxima. Intended for fault-injection and
    /// externally generated libraries; see [`Self::max_divergence`].
    pub fn from_fields(grid: &Grid, sigmas: Vec<VectorField>) -> Result<Self> {
        for s in &sigmas {
            grid.check_same(s.grid())?;
            s.ensure_finite("noise coefficient")?;
        }
        let sup_norms = sigmas.iter().map(VectorField::max_magnitude).collect();
        let modes = vec![None; sigmas.len()];
        Ok(Self::assemble(grid, sigmas, modes, sup_norms))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    pub fn sigmas(&self) -> &[VectorField] {
        &self.sigmas
    }

    pub fn sigma(&self, k: usize) -> &VectorField {
        &self.sigmas[k]
    }

    pub fn modes(&self) -> &[Option<NoiseMode>] {
        &self.modes
    }

    pub fn sup_norms(&self) -> &[f64] {
        &self.sup_norms
    }

    pub fn max_sup_norm(&self) -> f64 {
        self.sup_norms.iter().cloned().fold(0.0, f64::max)
    }

    /// `Σ_k sup|σ_k|²`, the effective diffusivity bound of the correction.
    pub fn sup_norm_sq_sum(&self) -> f64 {
        self.sup_norms.iter().map(|s| s * s).sum()
    }

    /// Largest spectral divergence over the library.
    pub fn max_divergence(&self) -> Result<f64> {
        let mut m = 0.0_f64;
        for s in &self.sigmas {
            m = m.max(divergence(s, DerivativeMethod::Spectral)?.max_abs());
        }
        Ok(m)
    }

    /// `Σ_k dW_k σ_k·g` for a gradient `g` given per axis.
    pub(crate) fn transport(&self, grad: &[Vec<f64>], dw: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (s, &w) in self.sigmas.iter().zip(dw) {
            for (d, g) in grad.iter().enumerate() {
                let sd = s.component(d).values();
                for ((o, a), b) in out.iter_mut().zip(sd).zip(g) {
                    *o += w * a * b;
                }
            }
        }
        out
    }

    /// `(Σ_k σ_k ⊗ σ_k) g` for a gradient `g` given per axis.
    pub(crate) fn second_moment_apply(&self, grad: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let dim = self.grid.dim();
        (0..dim)
            .map(|i| {
                let mut out = vec![0.0; self.grid.len()];
                for (j, g) in grad.iter().enumerate() {
                    for ((o, s), x) in out.iter_mut().zip(&self.second_moment[i * dim + j]).zip(g) {
                        *o += s * x;
                    }
                }
                out
            })
            .collect()
    }
}

/// Master seed plus realization index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub master: u64,
    pub realization: u64,
}

impl RngSeed {
    pub fn new(master: u64, realization: u64) -> Self {
        Self {
            master,
            realization,
        }
    }

    fn stream(&self, level: u32, index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master.to_le_bytes());
        key[8..16].copy_from_slice(&self.realization.to_le_bytes());
        key[16..24].copy_from_slice(&(level as u64).to_le_bytes());
        key[24..].copy_from_slice(&index.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }

    /// `count` standard normals keyed by `(master, realization, level, index)`.
    pub fn normals(&self, level: u32, index: u64, count: usize) -> Vec<f64> {
        let mut rng = self.stream(level, index);
        (0..count)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect()
    }
}

/// A `K`-dimensional Wiener path sampled on a uniform grid of step `dt`.
///
/// Increments are pure functions of `(seed, step)`. A path can be viewed at a
/// finer step with [`WienerPath::refined`]: the finer increments are produced
/// by Brownian-bridge bisection and sum exactly (up to rounding) to the coarse
/// ones, so runs at different step sizes see the same underlying path.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    seed: RngSeed,
    base_dt: f64,
    level: u32,
    count: usize,
}

impl WienerPath {
    pub fn new(seed: RngSeed, dt: f64, count: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("dt", "must be positive and finite"));
        }
        Ok(Self {
            seed,
            base_dt: dt,
            level: 0,
            count,
        })
    }

    pub fn seed(&self) -> RngSeed {
        self.seed
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dt(&self) -> f64 {
        self.base_dt / (1u64 << self.level) as f64
    }

    /// The same path with each step bisected `extra` more times.
    pub fn refined(&self, extra: u32) -> Self {
        Self {
            level: self.level + extra,
            ..self.clone()
        }
    }

    /// Increments `W(t_{j+1}) − W(t_j)` for step `j`.
    pub fn increment(&self, step: u64) -> Vec<f64> {
        self.increment_at(self.level, step)
    }

    /// Increment of the interval `index` at absolute bisection `level`.
    pub(crate) fn increment_at(&self, level: u32, index: u64) -> Vec<f64> {
        if level == 0 {
            let s = self.base_dt.sqrt();
            return self
                .seed
                .normals(0, index, self.count)
                .into_iter()
                .map(|z| s * z)
                .collect();
        }
        let parent = self.increment_at(level - 1, index / 2);
        let half_dt = self.base_dt / (1u64 << level) as f64;
        let s = (0.5 * half_dt).sqrt();
        let z = self.seed.normals(level, index / 2, self.count);
        parent
            .iter()
            .zip(z)
            .map(|(&p, z)| {
                let left = 0.5 * p + s * z;
                if index % 2 == 0 {
                    left
                } else {
                    p - left
                }
            })
            .collect()
    }
}

fn correction_fluxes(noise: &NoiseCoefficients, grads: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
    grads
        .iter()
        .map(|g| {
            noise
                .second_moment_apply(g)
                .into_iter()
                .map(|c| c.into_iter().map(|x| 0.5 * x).collect())
                .collect()
        })
        .collect()
}

/// `½ Σ_k div(σ_k (σ_k·∇f))` for several scalar channels at once.
pub(crate) fn correction_drift_batch(
    noise: &NoiseCoefficients,
    grads: &[Vec<Vec<f64>>],
) -> Vec<Vec<f64>> {
    let grid = noise.grid();
    if noise.is_empty() {
        return vec![vec![0.0; grid.len()]; grads.len()];
    }
    let fluxes = correction_fluxes(noise, grads);
    let mut out = Vec::with_capacity(fluxes.len());
    let per_call = (16 / grid.dim()).max(1);
    for chunk in fluxes.chunks(per_call) {
        let views: Vec<Vec<&[f64]>> = chunk
            .iter()
            .map(|f| f.iter().map(Vec::as_slice).collect())
            .collect();
        out.extend(spectral_divergences(grid, &views));
    }
    out
}

/// `½ Σ_k div(σ_k (σ_k·∇f))`.
pub fn ito_correction_drift_scalar(
    f: &ScalarField,
    noise: &NoiseCoefficients,
    method: DerivativeMethod,
) -> Result<ScalarField> {
    noise.grid().check_same(f.grid())?;
    f.ensure_finite("correction input")?;
    let grid = f.grid();
    if noise.is_empty() {
        return Ok(ScalarField::zeros(grid));
    }
    match method {
        DerivativeMethod::Spectral => {
            let grads = spectral_gradients(grid, &[f.values()]);
            let mut out = correction_drift_batch(noise, &grads);
            Ok(ScalarField::from_raw(grid, out.pop().unwrap()))
        }
        DerivativeMethod::CentralDifference => {
            let g = gradient(f, method)?;
            let grad: Vec<Vec<f64>> = g.components().iter().map(|c| c.values().to_vec()).collect();
            let flux = noise.second_moment_apply(&grad);
            let flux = VectorField::from_raw(grid, flux);
            Ok(divergence(&flux, method)?.scale(0.5))
        }
    }
}

/// Componentwise [`ito_correction_drift_scalar`].
pub fn ito_correction_drift_vector(
    v: &VectorField,
    noise: &NoiseCoefficients,
    method: DerivativeMethod,
) -> Result<VectorField> {
    VectorField::new(
        v.components()
            .iter()
            .map(|c| ito_correction_drift_scalar(c, noise, method))
            .collect::<Result<_>>()?,
    )
}
