//! Weak-form martingale residuals `M¹(φ)`, `M²(𝛗)` with predicted and
//! empirical variations.
//!
//! The drift and noise loadings use the adjoint of the spectral operators the
//! central-spectral stepper applies, so for Euler–Maruyama with that scheme the
//! residual increment equals `−Σ_k a_k ΔW_k` up to rounding.

use serde::Serialize;

use crate::diagnostics::defect::defect_estimate;
use crate::error::{Error, Result};
use crate::fields::{
    divergence, gradient, gradient_tensor, integrate, DerivativeMethod, ScalarField, TensorField,
    VectorField,
};
use crate::fluid::{pressure, velocity, viscous_stress, FluidParams, Scheme, State};
use crate::noise::NoiseCoefficients;
use crate::stepper::{StepEvent, TrajectoryRecord};
use crate::sum::compensated_sum;

/// `∫ f g` for a `g` of zero mean (a derivative), evaluated as
/// `∫ (f − f(x₀)) g` so that constant `f` contributes exactly zero.
fn pair(f: &ScalarField, g: &ScalarField) -> f64 {
    let f0 = f.values()[0];
    let cell = f.grid().cell_volume();
    cell * compensated_sum(f.values().iter().zip(g.values()).map(|(a, b)| (a - f0) * b))
}

/// `Σ_ij ∫ A_ij B_ij` with every `B_ij` of zero mean.
fn pair_tensor(a: &TensorField, b: &TensorField) -> f64 {
    let d = a.dim();
    compensated_sum((0..d * d).map(|k| pair(a.get(k / d, k % d), b.get(k / d, k % d))))
}

/// Residual path with its variations. Entry `j` refers to time `times[j]`;
/// `loadings[j]` are the noise coefficients of step `j` (one fewer than
/// times).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleProbe {
    pub times: Vec<f64>,
    pub residual: Vec<f64>,
    pub predicted_qv: Vec<f64>,
    pub empirical_qv: Vec<f64>,
    #[serde(skip)]
    pub loadings: Vec<Vec<f64>>,
    #[serde(skip)]
    pub step_dt: Vec<f64>,
}

impl MartingaleProbe {
    fn start(time: f64) -> Self {
        Self {
            times: vec![time],
            residual: vec![0.0],
            predicted_qv: vec![0.0],
            empirical_qv: vec![0.0],
            loadings: Vec::new(),
            step_dt: Vec::new(),
        }
    }

    fn push(&mut self, time: f64, dm: f64, dt: f64, loadings: Vec<f64>) {
        let qv = dt * loadings.iter().map(|a| a * a).sum::<f64>();
        self.times.push(time);
        self.residual.push(self.residual.last().unwrap() + dm);
        self.predicted_qv
            .push(self.predicted_qv.last().unwrap() + qv);
        self.empirical_qv
            .push(self.empirical_qv.last().unwrap() + dm * dm);
        self.loadings.push(loadings);
        self.step_dt.push(dt);
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual.last().unwrap()
    }

    pub fn final_predicted_qv(&self) -> f64 {
        *self.predicted_qv.last().unwrap()
    }

    /// `∫ Σ_k a_k b_k ds` against another probe on the same steps.
    pub fn predicted_cross_variation(&self, other: &Self) -> Result<Vec<f64>> {
        if self.loadings.len() != other.loadings.len() {
            return Err(Error::LengthMismatch {
                expected: self.loadings.len(),
                got: other.loadings.len(),
            });
        }
        let mut out = vec![0.0];
        for ((a, b), dt) in self.loadings.iter().zip(&other.loadings).zip(&self.step_dt) {
            let inc: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            out.push(out.last().unwrap() + dt * inc);
        }
        Ok(out)
    }
}

/// Online residual for the continuity equation,
/// `M¹ = [∫ρφ] − ∫∫m·∇φ − ½Σ_k∫∫ρ div(σ_k(σ_k·∇φ))`.
pub struct ContinuityProbe {
    grad_phi: VectorField,
    phi: ScalarField,
    correction: ScalarField,
    adjoint: Vec<ScalarField>,
    probe: MartingaleProbe,
}

fn correction_of(
    f: &ScalarField,
    noise: &NoiseCoefficients,
    sp: DerivativeMethod,
) -> Result<ScalarField> {
    crate::noise::ito_correction_drift_scalar(f, noise, sp)
}

impl ContinuityProbe {
    pub fn new(phi: &ScalarField, noise: &NoiseCoefficients, start_time: f64) -> Result<Self> {
        noise.grid().check_same(phi.grid())?;
        let sp = DerivativeMethod::Spectral;
        let adjoint = noise
            .sigmas()
            .iter()
            .map(|s| divergence(&s.scale_by(phi)?, sp))
            .collect::<Result<_>>()?;
        Ok(Self {
            grad_phi: gradient(phi, sp)?,
            phi: phi.clone(),
            correction: correction_of(phi, noise, sp)?,
            adjoint,
            probe: MartingaleProbe::start(start_time),
        })
    }

    pub fn observe(&mut self, ev: &StepEvent) -> Result<()> {
        let d_rho = ev.after.rho.lincomb(1.0, &ev.before.rho, -1.0)?;
        let change = integrate(&self.phi.mul(&d_rho)?);
        let flux = compensated_sum(
            ev.before
                .momentum
                .components()
                .iter()
                .zip(self.grad_phi.components())
                .map(|(m, g)| pair(m, g)),
        );
        let corr = pair(&ev.before.rho, &self.correction);
        let loadings = self
            .adjoint
            .iter()
            .map(|a| pair(&ev.before.rho, a))
            .collect();
        self.probe.push(
            ev.after.time,
            change - ev.dt * (flux + corr),
            ev.dt,
            loadings,
        );
        Ok(())
    }

    pub fn finish(self) -> MartingaleProbe {
        self.probe
    }
}

/// Whether the momentum residual subtracts estimated defect integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DefectPolicy {
    Zero,
    Mollified { scale: f64 },
}

/// Online residual for the momentum equation,
/// `M² = [∫m·𝛗] − ∫∫(m⊗u:∇𝛗 + p div𝛗 − 𝕊:∇𝛗) − ½Σ_k∫∫m·div(σ_k(σ_k·∇)𝛗)`
/// minus defect integrals when requested.
pub struct MomentumProbe {
    phi: VectorField,
    grad_phi: TensorField,
    div_phi: ScalarField,
    correction: Vec<ScalarField>,
    adjoint: Vec<Vec<ScalarField>>,
    params: FluidParams,
    method: DerivativeMethod,
    defect: DefectPolicy,
    probe: MartingaleProbe,
}

impl MomentumProbe {
    pub fn new(
        phi: &VectorField,
        noise: &NoiseCoefficients,
        params: &FluidParams,
        scheme: Scheme,
        defect: DefectPolicy,
        start_time: f64,
    ) -> Result<Self> {
        noise.grid().check_same(phi.grid())?;
        let sp = DerivativeMethod::Spectral;
        let adjoint = noise
            .sigmas()
            .iter()
            .map(|s| {
                phi.components()
                    .iter()
                    .map(|c| divergence(&s.scale_by(c)?, sp))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let correction = phi
            .components()
            .iter()
            .map(|c| correction_of(c, noise, sp))
            .collect::<Result<_>>()?;
        let method = scheme.derivative_method();
        Ok(Self {
            phi: phi.clone(),
            grad_phi: gradient_tensor(phi, method)?,
            div_phi: divergence(phi, method)?,
            correction,
            adjoint,
            params: *params,
            method,
            defect,
            probe: MartingaleProbe::start(start_time),
        })
    }

    fn drift(&self, s: &State) -> Result<f64> {
        let u = velocity(s, &self.params)?;
        let dim = u.dim();
        let grid = s.grid();
        let mut flux = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                flux.push(s.momentum.component(i).mul(u.component(j))?);
            }
        }
        let flux = TensorField::new(flux)?;
        let mut total = pair_tensor(&flux, &self.grad_phi);
        total += pair(&pressure(&s.rho, &self.params)?, &self.div_phi);
        if !self.params.is_inviscid() {
            let stress = viscous_stress(&gradient_tensor(&u, self.method)?, &self.params);
            total -= pair_tensor(&stress, &self.grad_phi);
        }
        total +=
            compensated_sum((0..dim).map(|i| pair(s.momentum.component(i), &self.correction[i])));
        if let DefectPolicy::Mollified { scale } = self.defect {
            let d = defect_estimate(s, scale, &self.params)?;
            total += pair_tensor(&d.conv, &self.grad_phi);
            total += pair(&d.press, &self.div_phi);
        }
        debug_assert_eq!(grid.dim(), dim);
        Ok(total)
    }

    pub fn observe(&mut self, ev: &StepEvent) -> Result<()> {
        let dm = ev.after.momentum.lincomb(1.0, &ev.before.momentum, -1.0)?;
        let change = integrate(&self.phi.dot(&dm)?);
        let drift = self.drift(ev.before)?;
        let loadings = self
            .adjoint
            .iter()
            .map(|per_k| {
                compensated_sum(
                    per_k
                        .iter()
                        .zip(ev.before.momentum.components())
                        .map(|(a, m)| pair(m, a)),
                )
            })
            .collect();
        self.probe
            .push(ev.after.time, change - ev.dt * drift, ev.dt, loadings);
        Ok(())
    }

    pub fn finish(self) -> MartingaleProbe {
        self.probe
    }
}

fn replay<F: FnMut(&StepEvent) -> Result<()>>(traj: &TrajectoryRecord, mut f: F) -> Result<()> {
    if traj.stride != 1 || traj.states.len() != traj.steps.len() + 1 {
        return Err(Error::StrideTooCoarse(traj.stride));
    }
    for (i, step) in traj.steps.iter().enumerate() {
        f(&StepEvent {
            index: i,
            before: &traj.states[i],
            after: &traj.states[i + 1],
            dt: step.dt,
            dw: &step.dw,
        })?;
    }
    Ok(())
}

/// `M¹(φ)` along a trajectory recorded at every step.
pub fn weak_residual_continuity(
    traj: &TrajectoryRecord,
    phi: &ScalarField,
    noise: &NoiseCoefficients,
) -> Result<MartingaleProbe> {
    let mut probe = ContinuityProbe::new(phi, noise, traj.times[0])?;
    replay(traj, |ev| probe.observe(ev))?;
    Ok(probe.finish())
}

/// `M²(𝛗)` along a trajectory recorded at every step.
pub fn weak_residual_momentum(
    traj: &TrajectoryRecord,
    phi: &VectorField,
    defect: DefectPolicy,
    noise: &NoiseCoefficients,
    params: &FluidParams,
    scheme: Scheme,
) -> Result<MartingaleProbe> {
    let mut probe = MomentumProbe::new(phi, noise, params, scheme, defect, traj.times[0])?;
    replay(traj, |ev| probe.observe(ev))?;
    Ok(probe.finish())
}

/// Cumulative `Σ_j (M_{j+1} − M_j)²`, starting at 0.
pub fn empirical_quadratic_variation(path: &[f64]) -> Result<Vec<f64>> {
    empirical_cross_variation(path, path)
}

/// Cumulative `Σ_j (A_{j+1} − A_j)(B_{j+1} − B_j)`, starting at 0.
pub fn empirical_cross_variation(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: a.len(),
        });
    }
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut out = Vec::with_capacity(a.len());
    out.push(0.0);
    let mut acc = 0.0;
    for j in 1..a.len() {
        acc += (a[j] - a[j - 1]) * (b[j] - b[j - 1]);
        out.push(acc);
    }
    Ok(out)
}

/// Mean, unbiased variance and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleStatistics {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

impl SampleStatistics {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: n });
        }
        let mean = compensated_sum(samples.iter().copied()) / n as f64;
        let variance =
            compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean))) / (n - 1) as f64;
        Ok(Self {
            count: n,
            mean,
            variance,
            std_error: (variance / n as f64).sqrt(),
        })
    }

    /// Sample covariance of paired samples.
    pub fn covariance(a: &[f64], b: &[f64]) -> Result<f64> {
        let sa = Self::from_samples(a)?;
        let sb = Self::from_samples(b)?;
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        Ok(
            compensated_sum(a.iter().zip(b).map(|(x, y)| (x - sa.mean) * (y - sb.mean)))
                / (a.len() - 1) as f64,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_variation_of_a_line_is_small() {
        let path: Vec<f64> = (0..=1000).map(|i| i as f64 * 1e-3).collect();
        let qv = empirical_quadratic_variation(&path).unwrap();
        assert!(qv.last().unwrap().abs() <= 1.1e-3);
        assert!(empirical_quadratic_variation(&[1.0]).is_err());
    }

    #[test]
    fn statistics_of_known_samples() {
        let s = SampleStatistics::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        let c = SampleStatistics::covariance(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((c - 2.0).abs() < 1e-15);
    }
}
