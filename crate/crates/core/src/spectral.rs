//! Multi-dimensional FFT engine for a fixed periodic grid.
//!
//! Real fields are transformed two at a time by packing them into the real
//! and imaginary parts of one complex buffer, which gives the cost of a
//! real-to-complex transform without a separate half-spectrum layout.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

const MAX_CHANNELS: usize = 16;

pub(crate) struct Spectral {
    shape: Vec<usize>,
    len: usize,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// First-derivative symbols per flat index. The Nyquist entry of an
    /// even-length axis is zero so odd derivatives stay Hermitian.
    wavenumbers: Vec<[f64; 3]>,
    /// Full |ξ|² including Nyquist modes.
    norm_sq: Vec<f64>,
    /// Flat index of -ξ.
    mirror: Vec<usize>,
}

fn signed_mode(i: usize, n: usize) -> i64 {
    if 2 * i < n {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl Spectral {
    pub(crate) fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        let forward = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let len: usize = shape.iter().product();
        let mut wavenumbers = Vec::with_capacity(len);
        let mut norm_sq = Vec::with_capacity(len);
        let mut mirror = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            let mut k = [0.0; 3];
            let mut sq = 0.0;
            let mut flat_mirror = 0usize;
            for (d, &n) in shape.iter().enumerate() {
                let m = signed_mode(idx[d], n);
                sq += (m * m) as f64;
                let nyquist = n % 2 == 0 && idx[d] == n / 2;
                k[d] = if nyquist { 0.0 } else { m as f64 };
                flat_mirror = flat_mirror * n + (n - idx[d]) % n;
            }
            wavenumbers.push(k);
            norm_sq.push(sq);
            mirror.push(flat_mirror);
            for d in (0..shape.len()).rev() {
                idx[d] += 1;
                if idx[d] < shape[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Self {
            shape: shape.to_vec(),
            len,
            forward,
            inverse,
            wavenumbers,
            norm_sq,
            mirror,
        }
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn norm_sq(&self, idx: usize) -> f64 {
        self.norm_sq[idx]
    }

    fn transform_axis(&self, buf: &mut [Complex64], axis: usize, inverse: bool) {
        let n = self.shape[axis];
        let plan = if inverse {
            &self.inverse[axis]
        } else {
            &self.forward[axis]
        };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let inner: usize = self.shape[axis + 1..].iter().product();
        if inner == 1 {
            plan.process_with_scratch(buf, &mut scratch);
            return;
        }
        let outer: usize = self.shape[..axis].iter().product();
        let mut lines = vec![Complex64::new(0.0, 0.0); self.len];
        for o in 0..outer {
            let base = o * n * inner;
            for i in 0..n {
                let row = base + i * inner;
                for j in 0..inner {
                    lines[(o * inner + j) * n + i] = buf[row + j];
                }
            }
        }
        plan.process_with_scratch(&mut lines, &mut scratch);
        for o in 0..outer {
            let base = o * n * inner;
            for i in 0..n {
                let row = base + i * inner;
                for j in 0..inner {
                    buf[row + j] = lines[(o * inner + j) * n + i];
                }
            }
        }
    }

    pub(crate) fn forward_complex(&self, buf: &mut [Complex64]) {
        for axis in 0..self.shape.len() {
            self.transform_axis(buf, axis, false);
        }
    }

    pub(crate) fn inverse_complex(&self, buf: &mut [Complex64]) {
        for axis in 0..self.shape.len() {
            self.transform_axis(buf, axis, true);
        }
        let scale = 1.0 / self.len as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    /// Spectra of real inputs. With `drop_constant` the first sample of each
    /// input is subtracted before transforming; this only alters the zero
    /// mode and makes constant inputs transform to exact zeros.
    pub(crate) fn spectra(&self, inputs: &[&[f64]], drop_constant: bool) -> Vec<Vec<Complex64>> {
        let mut out = Vec::with_capacity(inputs.len());
        for pair in inputs.chunks(2) {
            let s0 = if drop_constant { pair[0][0] } else { 0.0 };
            let mut z: Vec<Complex64> = if pair.len() == 2 {
                let s1 = if drop_constant { pair[1][0] } else { 0.0 };
                pair[0]
                    .iter()
                    .zip(pair[1])
                    .map(|(&a, &b)| Complex64::new(a - s0, b - s1))
                    .collect()
            } else {
                pair[0]
                    .iter()
                    .map(|&a| Complex64::new(a - s0, 0.0))
                    .collect()
            };
            self.forward_complex(&mut z);
            if pair.len() == 2 {
                let mut a = vec![Complex64::new(0.0, 0.0); self.len];
                let mut b = vec![Complex64::new(0.0, 0.0); self.len];
                for idx in 0..self.len {
                    let zk = z[idx];
                    let zm = z[self.mirror[idx]].conj();
                    a[idx] = (zk + zm) * 0.5;
                    let d = zk - zm;
                    b[idx] = Complex64::new(d.im * 0.5, -d.re * 0.5);
                }
                out.push(a);
                out.push(b);
            } else {
                out.push(z);
            }
        }
        out
    }

    /// Real fields from Hermitian spectra, two per inverse transform.
    pub(crate) fn reals(&self, spectra: Vec<Vec<Complex64>>) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(spectra.len());
        let mut iter = spectra.into_iter();
        while let Some(mut a) = iter.next() {
            match iter.next() {
                Some(b) => {
                    for (x, y) in a.iter_mut().zip(&b) {
                        *x += Complex64::new(-y.im, y.re);
                    }
                    self.inverse_complex(&mut a);
                    out.push(a.iter().map(|z| z.re).collect());
                    out.push(a.iter().map(|z| z.im).collect());
                }
                None => {
                    self.inverse_complex(&mut a);
                    out.push(a.iter().map(|z| z.re).collect());
                }
            }
        }
        out
    }

    /// Applies a pointwise-in-frequency linear map. `symbol(idx, k, input
    /// coefficients, output coefficients)` is called once per mode; outputs
    /// are assumed to be spectra of real fields.
    pub(crate) fn linear_map<F>(
        &self,
        inputs: &[&[f64]],
        n_out: usize,
        drop_constant: bool,
        mut symbol: F,
    ) -> Vec<Vec<f64>>
    where
        F: FnMut(usize, &[f64; 3], &[Complex64], &mut [Complex64]),
    {
        assert!(inputs.len() <= MAX_CHANNELS && n_out <= MAX_CHANNELS);
        let n_in = inputs.len();
        let spectra = self.spectra(inputs, drop_constant);
        let mut outs = vec![vec![Complex64::new(0.0, 0.0); self.len]; n_out];
        let mut ins = [Complex64::new(0.0, 0.0); MAX_CHANNELS];
        let mut res = [Complex64::new(0.0, 0.0); MAX_CHANNELS];
        for idx in 0..self.len {
            for (c, s) in spectra.iter().enumerate() {
                ins[c] = s[idx];
            }
            for r in res.iter_mut().take(n_out) {
                *r = Complex64::new(0.0, 0.0);
            }
            symbol(idx, &self.wavenumbers[idx], &ins[..n_in], &mut res[..n_out]);
            for (o, out) in outs.iter_mut().enumerate() {
                out[idx] = res[o];
            }
        }
        self.reals(outs)
    }
}
