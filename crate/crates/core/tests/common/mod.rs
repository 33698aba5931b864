#![allow(dead_code)]

use proptest::prelude::*;
use stochflow::fields::{Grid, ScalarField, VectorField};
use stochflow::fluid::State;

/// Coefficients of `Σ a cos(ξ·x) + b sin(ξ·x)` over `|ξ_d| ≤ 3`.
pub const MODES: usize = 49;

pub fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 2 * MODES)
}

pub fn band_limited(grid: &Grid, c: &[f64], scale: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x| {
        let mut v = 0.0;
        let mut idx = 0;
        for i in -3i32..=3 {
            for j in -3i32..=3 {
                let arg = i as f64 * x[0] + j as f64 * x[1];
                let decay = 1.0 / (1.0 + (i * i + j * j) as f64);
                v += decay * (c[2 * idx] * arg.cos() + c[2 * idx + 1] * arg.sin());
                idx += 1;
            }
        }
        scale * v
    })
    .unwrap()
}

/// Positive band-limited density and momentum built from one coefficient
/// vector.
pub fn smooth_state(grid: &Grid, c: &[f64]) -> State {
    let rho = band_limited(grid, c, 0.05).map(|v| 1.0 + v);
    let rotated: Vec<f64> = c.iter().rev().cloned().collect();
    let m1 = band_limited(grid, &rotated, 0.1);
    let shifted: Vec<f64> = c.iter().map(|v| v * 0.7 - 0.1).collect();
    let m2 = band_limited(grid, &shifted, 0.1);
    State::new(rho, VectorField::new(vec![m1, m2]).unwrap(), 0.0).unwrap()
}

pub fn relative_l2(a: &State, b: &State) -> f64 {
    let mut num = a.rho.lincomb(1.0, &b.rho, -1.0).unwrap().l2_norm().powi(2);
    let mut den = b.rho.l2_norm().powi(2);
    for (x, y) in a.momentum.components().iter().zip(b.momentum.components()) {
        num += x.lincomb(1.0, y, -1.0).unwrap().l2_norm().powi(2);
        den += y.l2_norm().powi(2);
    }
    (num / den).sqrt()
}
