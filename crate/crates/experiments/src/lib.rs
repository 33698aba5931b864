//! Scenario runner for the stochastic compressible flow solver: single runs,
//! Monte Carlo ensembles, vanishing-viscosity sweeps, weak-strong comparisons
//! and a self-test, with reproducible CSV/JSONL output and hashed manifests.

pub mod config;
pub mod ensemble;
pub mod error;
pub mod initial;
pub mod output;
pub mod selftest;
pub mod setup;
pub mod single;
pub mod sweep;
pub mod weak_strong;

pub use config::{InitialCondition, ScenarioConfig, ScenarioKind};
pub use error::{ExperimentError, Result};
pub use single::Report;
