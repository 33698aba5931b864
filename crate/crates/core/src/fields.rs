//! Periodic grids on the flat torus `[0, 2π)^N` and the discrete calculus
//! shared by every other module.
//!
//! Values are stored row-major with the last axis contiguous. Cell `i` along
//! an axis sits at `x = i·h`, `h = 2π/n`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::spectral::Spectral;
use crate::sum::compensated_sum;

/// Smallest admissible resolution along any axis.
pub const MIN_RESOLUTION: usize = 8;

/// Derivative backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMethod {
    /// Fourier collocation; exact on resolved trigonometric polynomials.
    Spectral,
    /// Second-order centred stencil with periodic wraparound.
    CentralDifference,
}

struct GridInner {
    shape: Vec<usize>,
    spacing: Vec<f64>,
    len: usize,
    spectral: Spectral,
}

/// A periodic grid of dimension 2 or 3. Cheap to clone; clones share FFT
/// plans.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("shape", &self.inner.shape)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.shape == other.inner.shape
    }
}

impl Grid {
    pub fn new(shape: &[usize]) -> Result<Self> {
        if !(2..=3).contains(&shape.len()) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 2 or 3, got {}",
                shape.len()
            )));
        }
        if let Some(&n) = shape.iter().find(|&&n| n < MIN_RESOLUTION) {
            return Err(Error::InvalidGrid(format!(
                "resolution {n} below minimum {MIN_RESOLUTION}"
            )));
        }
        let spacing = shape.iter().map(|&n| 2.0 * PI / n as f64).collect();
        Ok(Self {
            inner: Arc::new(GridInner {
                shape: shape.to_vec(),
                spacing,
                len: shape.iter().product(),
                spectral: Spectral::new(shape),
            }),
        })
    }

    /// Square (cubic) grid with `n` cells per axis.
    pub fn uniform(dim: usize, n: usize) -> Result<Self> {
        Self::new(&vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.inner.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        self.inner.len == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.inner.spacing[axis]
    }

    pub fn min_spacing(&self) -> f64 {
        self.inner
            .spacing
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        self.inner.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        self.inner.spacing.iter().product()
    }

    /// Largest first-derivative wavenumber magnitude squared, `Σ_d (n_d/2)²`.
    pub fn max_wavenumber_sq(&self) -> f64 {
        self.inner
            .shape
            .iter()
            .map(|&n| {
                let k = (n / 2) as f64;
                k * k
            })
            .sum()
    }

    pub(crate) fn spectral(&self) -> &Spectral {
        &self.inner.spectral
    }

    /// Coordinates of the cell with flat index `idx` (unused axes are zero).
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        let mut rem = idx;
        for d in (0..self.dim()).rev() {
            let n = self.inner.shape[d];
            x[d] = (rem % n) as f64 * self.inner.spacing[d];
            rem /= n;
        }
        x
    }

    fn stride(&self, axis: usize) -> usize {
        self.inner.shape[axis + 1..].iter().product()
    }

    /// Flat index of the neighbour `offset` cells away along `axis`.
    pub(crate) fn neighbour(&self, idx: usize, axis: usize, offset: isize) -> usize {
        let n = self.inner.shape[axis];
        let stride = self.stride(axis);
        let i = (idx / stride) % n;
        let j = (i as isize + offset).rem_euclid(n as isize) as usize;
        idx + j * stride - i * stride
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.shape().to_vec(),
                right: other.shape().to_vec(),
            })
        }
    }
}

/// A real scalar field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("scalar field"));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_raw(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    /// Samples `f` at cell positions.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64; 3]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self::from_raw(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `alpha·self + beta·other`
    pub fn lincomb(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        self.zip_map(other, |a, b| alpha * a + beta * b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    /// Largest pointwise difference.
    pub fn max_diff(&self, other: &Self) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Discrete L² norm `(∫ f²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        integrate(&self.map(|v| v * v)).sqrt()
    }
}

/// A vector field with `dim` components.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    comps: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(comps: Vec<ScalarField>) -> Result<Self> {
        let grid = comps
            .first()
            .map(|c| c.grid.clone())
            .ok_or_else(|| invalid("components", "vector field needs components"))?;
        if comps.len() != grid.dim() {
            return Err(invalid(
                "components",
                format!("expected {} components, got {}", grid.dim(), comps.len()),
            ));
        }
        for c in &comps {
            grid.check_same(&c.grid)?;
        }
        Ok(Self { grid, comps })
    }

    pub(crate) fn from_raw(grid: &Grid, comps: Vec<Vec<f64>>) -> Self {
        Self {
            grid: grid.clone(),
            comps: comps
                .into_iter()
                .map(|c| ScalarField::from_raw(grid, c))
                .collect(),
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, &vec![0.0; grid.dim()])
    }

    pub fn constant(grid: &Grid, value: &[f64]) -> Self {
        assert_eq!(value.len(), grid.dim());
        Self {
            grid: grid.clone(),
            comps: value
                .iter()
                .map(|&c| ScalarField::constant(grid, c))
                .collect(),
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64; 3]) -> Vec<f64>) -> Result<Self> {
        let dim = grid.dim();
        let mut comps = vec![Vec::with_capacity(grid.len()); dim];
        for i in 0..grid.len() {
            let v = f(&grid.coords(i));
            if v.len() != dim {
                return Err(Error::LengthMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            for (c, x) in comps.iter_mut().zip(v) {
                c.push(x);
            }
        }
        Self::new(
            comps
                .into_iter()
                .map(|c| ScalarField::new(grid, c))
                .collect::<Result<_>>()?,
        )
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.comps[i]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.comps
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(ScalarField::is_finite)
    }

    pub(crate) fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    /// Pointwise Euclidean norm.
    pub fn magnitude(&self) -> ScalarField {
        let mut out = vec![0.0; self.grid.len()];
        for c in &self.comps {
            for (o, v) in out.iter_mut().zip(&c.values) {
                *o += v * v;
            }
        }
        ScalarField::from_raw(&self.grid, out.into_iter().map(f64::sqrt).collect())
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude().max()
    }

    pub fn dot(&self, other: &Self) -> Result<ScalarField> {
        self.grid.check_same(&other.grid)?;
        let mut out = vec![0.0; self.grid.len()];
        for (a, b) in self.comps.iter().zip(&other.comps) {
            for ((o, x), y) in out.iter_mut().zip(&a.values).zip(&b.values) {
                *o += x * y;
            }
        }
        Ok(ScalarField::from_raw(&self.grid, out))
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            grid: self.grid.clone(),
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn lincomb(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.lincomb(alpha, b, beta))
                .collect::<Result<_>>()?,
        })
    }

    /// Multiply every component by a scalar field.
    pub fn scale_by(&self, s: &ScalarField) -> Result<Self> {
        Ok(Self {
            grid: self.grid.clone(),
            comps: self.comps.iter().map(|c| c.mul(s)).collect::<Result<_>>()?,
        })
    }

    pub fn max_diff(&self, other: &Self) -> Result<f64> {
        let mut m = 0.0_f64;
        for (a, b) in self.comps.iter().zip(&other.comps) {
            m = m.max(a.max_diff(b)?);
        }
        Ok(m)
    }

    /// Componentwise integrals.
    pub fn integral(&self) -> Vec<f64> {
        self.comps.iter().map(integrate).collect()
    }
}

/// A `dim × dim` tensor field, components stored row-major: `(i, j)` at
/// `i·dim + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    grid: Grid,
    comps: Vec<ScalarField>,
}

impl TensorField {
    pub fn new(comps: Vec<ScalarField>) -> Result<Self> {
        let grid = comps
            .first()
            .map(|c| c.grid.clone())
            .ok_or_else(|| invalid("components", "tensor field needs components"))?;
        let d = grid.dim();
        if comps.len() != d * d {
            return Err(invalid(
                "components",
                format!("expected {} components, got {}", d * d, comps.len()),
            ));
        }
        for c in &comps {
            grid.check_same(&c.grid)?;
        }
        Ok(Self { grid, comps })
    }

    pub fn zeros(grid: &Grid) -> Self {
        let d = grid.dim();
        Self {
            grid: grid.clone(),
            comps: (0..d * d).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    /// `c·I`
    pub fn isotropic(grid: &Grid, c: f64) -> Self {
        let d = grid.dim();
        Self {
            grid: grid.clone(),
            comps: (0..d * d)
                .map(|k| ScalarField::constant(grid, if k / d == k % d { c } else { 0.0 }))
                .collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        &self.comps[i * self.dim() + j]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim();
        Self {
            grid: self.grid.clone(),
            comps: (0..d * d)
                .map(|k| self.comps[(k % d) * d + k / d].clone())
                .collect(),
        }
    }

    pub fn trace(&self) -> ScalarField {
        let d = self.dim();
        let mut out = vec![0.0; self.grid.len()];
        for i in 0..d {
            for (o, v) in out.iter_mut().zip(&self.get(i, i).values) {
                *o += v;
            }
        }
        ScalarField::from_raw(&self.grid, out)
    }

    /// Pointwise Frobenius contraction `A : B = Σ A_ij B_ij`.
    pub fn contract(&self, other: &Self) -> Result<ScalarField> {
        self.grid.check_same(&other.grid)?;
        let mut out = vec![0.0; self.grid.len()];
        for (a, b) in self.comps.iter().zip(&other.comps) {
            for ((o, x), y) in out.iter_mut().zip(&a.values).zip(&b.values) {
                *o += x * y;
            }
        }
        Ok(ScalarField::from_raw(&self.grid, out))
    }

    pub fn max_diff(&self, other: &Self) -> Result<f64> {
        let mut m = 0.0_f64;
        for (a, b) in self.comps.iter().zip(&other.comps) {
            m = m.max(a.max_diff(b)?);
        }
        Ok(m)
    }

    /// Matrix at one cell, row-major.
    pub fn at(&self, idx: usize) -> Vec<f64> {
        self.comps.iter().map(|c| c.values[idx]).collect()
    }
}

fn check_finite_inputs(fields: &[&ScalarField]) -> Result<()> {
    for f in fields {
        f.ensure_finite("derivative input")?;
    }
    Ok(())
}

fn central_difference(f: &ScalarField, axis: usize) -> Vec<f64> {
    let grid = &f.grid;
    let inv = 0.5 / grid.spacing(axis);
    (0..grid.len())
        .map(|i| {
            (f.values[grid.neighbour(i, axis, 1)] - f.values[grid.neighbour(i, axis, -1)]) * inv
        })
        .collect()
}

/// Spectral partial derivatives of several scalar fields at once: result
/// `[field][axis]`.
pub(crate) fn spectral_gradients(grid: &Grid, fields: &[&[f64]]) -> Vec<Vec<Vec<f64>>> {
    let dim = grid.dim();
    let n = fields.len();
    let mut flat = grid
        .spectral()
        .linear_map(fields, n * dim, true, |_, k, ins, outs| {
            for (f, z) in ins.iter().enumerate() {
                for d in 0..dim {
                    outs[f * dim + d] = Complex64::new(-k[d] * z.im, k[d] * z.re);
                }
            }
        })
        .into_iter();
    (0..n)
        .map(|_| (0..dim).map(|_| flat.next().unwrap()).collect())
        .collect()
}

/// Spectral divergences of several vector fields (each given by `dim`
/// component slices).
pub(crate) fn spectral_divergences(grid: &Grid, fields: &[Vec<&[f64]>]) -> Vec<Vec<f64>> {
    let dim = grid.dim();
    let inputs: Vec<&[f64]> = fields.iter().flat_map(|v| v.iter().copied()).collect();
    grid.spectral()
        .linear_map(&inputs, fields.len(), true, |_, k, ins, outs| {
            for (f, out) in outs.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for d in 0..dim {
                    let z = ins[f * dim + d];
                    acc += Complex64::new(-k[d] * z.im, k[d] * z.re);
                }
                *out = acc;
            }
        })
}

/// `∇f`. Spectral derivatives zero the Nyquist mode of even axes.
pub fn gradient(f: &ScalarField, method: DerivativeMethod) -> Result<VectorField> {
    check_finite_inputs(&[f])?;
    let grid = &f.grid;
    let comps = match method {
        DerivativeMethod::Spectral => spectral_gradients(grid, &[&f.values]).pop().unwrap(),
        DerivativeMethod::CentralDifference => {
            (0..grid.dim()).map(|d| central_difference(f, d)).collect()
        }
    };
    Ok(VectorField::from_raw(grid, comps))
}

/// `div v = Σ_d ∂_d v_d`.
pub fn divergence(v: &VectorField, method: DerivativeMethod) -> Result<ScalarField> {
    check_finite_inputs(&v.comps.iter().collect::<Vec<_>>())?;
    let grid = &v.grid;
    let values = match method {
        DerivativeMethod::Spectral => {
            let comps: Vec<&[f64]> = v.comps.iter().map(|c| c.values.as_slice()).collect();
            spectral_divergences(grid, &[comps]).pop().unwrap()
        }
        DerivativeMethod::CentralDifference => {
            let mut out = vec![0.0; grid.len()];
            for (d, c) in v.comps.iter().enumerate() {
                for (o, x) in out.iter_mut().zip(central_difference(c, d)) {
                    *o += x;
                }
            }
            out
        }
    };
    Ok(ScalarField::from_raw(grid, values))
}

/// Velocity-gradient style tensor `(∇v)_ij = ∂_j v_i`.
pub fn gradient_tensor(v: &VectorField, method: DerivativeMethod) -> Result<TensorField> {
    check_finite_inputs(&v.comps.iter().collect::<Vec<_>>())?;
    let grid = &v.grid;
    let rows: Vec<Vec<Vec<f64>>> = match method {
        DerivativeMethod::Spectral => {
            let slices: Vec<&[f64]> = v.comps.iter().map(|c| c.values.as_slice()).collect();
            spectral_gradients(grid, &slices)
        }
        DerivativeMethod::CentralDifference => v
            .comps
            .iter()
            .map(|c| (0..grid.dim()).map(|d| central_difference(c, d)).collect())
            .collect(),
    };
    Ok(TensorField {
        grid: grid.clone(),
        comps: rows
            .into_iter()
            .flatten()
            .map(|c| ScalarField::from_raw(grid, c))
            .collect(),
    })
}

/// Row-wise divergence `(div T)_i = Σ_j ∂_j T_ij`.
pub fn divergence_tensor(t: &TensorField, method: DerivativeMethod) -> Result<VectorField> {
    let d = t.dim();
    let rows = (0..d)
        .map(|i| {
            VectorField::new((0..d).map(|j| t.get(i, j).clone()).collect())
                .and_then(|row| divergence(&row, method))
        })
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(rows)
}

/// `∫_{𝕋^N} f dx`, midpoint rule with compensated summation.
pub fn integrate(f: &ScalarField) -> f64 {
    f.grid.cell_volume() * compensated_sum(f.values.iter().copied())
}

/// `( Σ_ξ (1+|ξ|²)^{-k} |f̂(ξ)|² )^{1/2}` with `f̂` normalised so that
/// `k = 0` reproduces the discrete L² norm.
pub fn negative_sobolev_norm(f: &ScalarField, k: u32) -> Result<f64> {
    f.ensure_finite("sobolev norm input")?;
    let grid = &f.grid;
    let sp = grid.spectral();
    let mut z: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    sp.forward_complex(&mut z);
    let n = grid.len() as f64;
    let scale = grid.cell_volume() / n;
    let terms = z
        .iter()
        .enumerate()
        .map(|(idx, c)| c.norm_sqr() * (1.0 + sp.norm_sq(idx)).powi(-(k as i32)));
    Ok((scale * compensated_sum(terms)).sqrt())
}

/// Periodised Gaussian smoothing with standard deviation `scale`, applied as
/// a discrete circular convolution with a strictly positive, unit-mass
/// kernel. Positivity of the kernel is what makes Jensen-type defect
/// estimates nonnegative.
pub fn gaussian_smooth(fields: &[&ScalarField], scale: f64) -> Result<Vec<ScalarField>> {
    let grid = fields
        .first()
        .map(|f| f.grid.clone())
        .ok_or_else(|| invalid("fields", "nothing to smooth"))?;
    for f in fields {
        grid.check_same(&f.grid)?;
        f.ensure_finite("smoothing input")?;
    }
    if !(scale >= grid.max_spacing()) {
        return Err(invalid(
            "scale",
            format!(
                "smoothing scale {scale} below grid spacing {}",
                grid.max_spacing()
            ),
        ));
    }
    let symbols = kernel_symbols(&grid, scale);
    let shape = grid.shape().to_vec();
    let mut out = Vec::with_capacity(fields.len());
    for chunk in fields.chunks(SMOOTH_BATCH) {
        let slices: Vec<&[f64]> = chunk.iter().map(|f| f.values.as_slice()).collect();
        let res = grid
            .spectral()
            .linear_map(&slices, slices.len(), false, |idx, _, ins, outs| {
                let mut rem = idx;
                let mut w = 1.0;
                for d in (0..shape.len()).rev() {
                    w *= symbols[d][rem % shape[d]];
                    rem /= shape[d];
                }
                for (o, z) in outs.iter_mut().zip(ins) {
                    *o = z * w;
                }
            });
        out.extend(res.into_iter().map(|v| ScalarField::from_raw(&grid, v)));
    }
    Ok(out)
}

const SMOOTH_BATCH: usize = 16;

/// Per-axis DFT of the sampled, periodised, normalised Gaussian.
fn kernel_symbols(grid: &Grid, scale: f64) -> Vec<Vec<f64>> {
    let two_pi = 2.0 * PI;
    (0..grid.dim())
        .map(|d| {
            let n = grid.shape()[d];
            let h = grid.spacing(d);
            let images = (3.0 * scale / two_pi).ceil() as i64 + 2;
            let weights: Vec<f64> = (0..n)
                .map(|i| {
                    let x = i as f64 * h;
                    (-images..=images)
                        .map(|j| {
                            let y = x - two_pi * j as f64;
                            (-0.5 * y * y / (scale * scale)).exp()
                        })
                        .sum::<f64>()
                })
                .collect();
            let total: f64 = weights.iter().sum();
            (0..n)
                .map(|m| {
                    weights
                        .iter()
                        .enumerate()
                        .map(|(i, w)| w * (two_pi * (m * i) as f64 / n as f64).cos())
                        .sum::<f64>()
                        / total
                })
                .collect()
        })
        .collect()
}

/// Trigonometric interpolation onto a finer (or equal) grid. Nyquist
/// coefficients of the source are split symmetrically.
pub fn resample(f: &ScalarField, target: &Grid) -> Result<ScalarField> {
    let src = &f.grid;
    if src == target {
        return Ok(f.clone());
    }
    if src.dim() != target.dim() || src.shape().iter().zip(target.shape()).any(|(a, b)| a > b) {
        return Err(Error::GridMismatch {
            left: src.shape().to_vec(),
            right: target.shape().to_vec(),
        });
    }
    let mut z: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    src.spectral().forward_complex(&mut z);
    let dim = src.dim();
    let mut out = vec![Complex64::new(0.0, 0.0); target.len()];
    let factor = target.len() as f64 / src.len() as f64;
    let mut idx = vec![0usize; dim];
    for coef in z.iter() {
        // (target index, weight) options per axis
        let mut targets: Vec<(usize, f64)> = vec![(0, factor)];
        for d in 0..dim {
            let ns = src.shape()[d];
            let nt = target.shape()[d];
            let i = idx[d];
            let opts: Vec<(usize, f64)> = if ns % 2 == 0 && i == ns / 2 {
                let half = ns / 2;
                vec![(half, 0.5), (nt - half, 0.5)]
            } else if 2 * i < ns {
                vec![(i, 1.0)]
            } else {
                vec![(nt - (ns - i), 1.0)]
            };
            targets = targets
                .iter()
                .flat_map(|&(t, w)| opts.iter().map(move |&(o, v)| (t * nt + o, w * v)))
                .collect();
        }
        for (t, w) in targets {
            out[t] += coef * w;
        }
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < src.shape()[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    target.spectral().inverse_complex(&mut out);
    ScalarField::new(target, out.iter().map(|c| c.re).collect())
}

/// Componentwise [`resample`].
pub fn resample_vector(v: &VectorField, target: &Grid) -> Result<VectorField> {
    VectorField::new(
        v.comps
            .iter()
            .map(|c| resample(c, target))
            .collect::<Result<_>>()?,
    )
}

/// Samples of `f` at the points of a coarser grid whose axes divide the
/// source axes (injection).
pub fn restrict(f: &ScalarField, target: &Grid) -> Result<ScalarField> {
    let src = &f.grid;
    let mismatch = || Error::GridMismatch {
        left: src.shape().to_vec(),
        right: target.shape().to_vec(),
    };
    if src.dim() != target.dim() {
        return Err(mismatch());
    }
    let ratios: Vec<usize> = src
        .shape()
        .iter()
        .zip(target.shape())
        .map(|(&s, &t)| {
            if s % t == 0 {
                Ok(s / t)
            } else {
                Err(mismatch())
            }
        })
        .collect::<Result<_>>()?;
    let dim = src.dim();
    let values = (0..target.len())
        .map(|mut t| {
            let mut idx = 0;
            let mut stride = 1;
            for d in (0..dim).rev() {
                let i = t % target.shape()[d];
                t /= target.shape()[d];
                idx += i * ratios[d] * stride;
                stride *= src.shape()[d];
            }
            f.values[idx]
        })
        .collect();
    ScalarField::new(target, values)
}

/// Componentwise [`restrict`].
pub fn restrict_vector(v: &VectorField, target: &Grid) -> Result<VectorField> {
    VectorField::new(
        v.comps
            .iter()
            .map(|c| restrict(c, target))
            .collect::<Result<_>>()?,
    )
}
