//! Simulation and diagnostics for the isentropic compressible Euler and
//! Navier–Stokes systems on the periodic torus `[0, 2π)^N` (N = 2, 3), driven
//! by solenoidal transport noise in Stratonovich form.
//!
//! The crate is layered bottom-up:
//!
//! * [`fields`] — periodic grids, scalar/vector/tensor fields, spectral and
//!   central-difference calculus, quadrature and negative Sobolev norms.
//! * [`noise`] — divergence-free coefficient libraries `σ_k`, counter-based
//!   Wiener paths and the Itô–Stratonovich correction drifts.
//! * [`fluid`] — constitutive laws and the deterministic right-hand sides
//!   (pseudo-spectral and Rusanov finite volume).
//! * [`stepper`] — Itô Euler–Maruyama and Stratonovich Heun integrators,
//!   time-step control, guard/floor handling and trajectory recording.
//! * [`diagnostics`] — energies, relative energy and its rate, weak-form
//!   martingale residuals, defect estimators and maximum-principle bounds.

pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod fluid;
pub mod noise;
pub mod stepper;

mod spectral;
mod sum;

pub use error::{Error, Result};
pub use fields::{DerivativeMethod, Grid, ScalarField, TensorField, VectorField};
pub use fluid::{FluidParams, Scheme, State};
pub use noise::{NoiseCoefficients, NoiseSpec, RngSeed, WienerPath};
pub use stepper::{StepConfig, Stepper, Termination, TrajectoryRecord};
