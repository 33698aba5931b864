use serde::Serialize;

use crate::diagnostics::defect::DefectEstimate;
use crate::error::Result;
use crate::fluid::{dissipation_rate, FluidParams, Scheme, State};
use crate::stepper::StepEvent;
use crate::sum::compensated_sum;

/// `∫ |m|²/(2ρ) + a ρ^γ/(γ−1) dx`.
pub fn energy_ns(state: &State, params: &FluidParams) -> Result<f64> {
    state.check_floor(params)?;
    let grid = state.grid();
    let rho = state.rho.values();
    let comps: Vec<&[f64]> = state
        .momentum
        .components()
        .iter()
        .map(|c| c.values())
        .collect();
    let terms = (0..grid.len()).map(|i| {
        let m_sq: f64 = comps.iter().map(|c| c[i] * c[i]).sum();
        0.5 * m_sq / rho[i] + params.potential_at(rho[i])
    });
    Ok(grid.cell_volume() * compensated_sum(terms))
}

/// Base energy plus `½∫tr R_conv + 1/(γ−1)∫R_press`.
pub fn energy_euler_total(
    state: &State,
    defect: &DefectEstimate,
    params: &FluidParams,
) -> Result<f64> {
    state.grid().check_same(defect.grid())?;
    Ok(energy_ns(state, params)?
        + 0.5 * defect.conv_trace_integral()
        + defect.press_integral() / (params.gamma - 1.0))
}

/// One row of the energy stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyRow {
    pub time: f64,
    pub energy_ns: f64,
    pub dissipation_cum: f64,
    pub energy_budget_residual: f64,
    pub mass: f64,
    pub momentum: Vec<f64>,
}

/// Energy and accumulated viscous dissipation along a trajectory. The
/// dissipation integral uses the trapezoid rule over executed steps.
#[derive(Debug, Clone)]
pub struct EnergyLedger {
    params: FluidParams,
    scheme: Scheme,
    initial: f64,
    last_rate: f64,
    dissipation: f64,
    rows: Vec<EnergyRow>,
}

impl EnergyLedger {
    pub fn new(initial: &State, params: &FluidParams, scheme: Scheme) -> Result<Self> {
        let e0 = energy_ns(initial, params)?;
        let mut ledger = Self {
            params: *params,
            scheme,
            initial: e0,
            last_rate: dissipation_rate(initial, params, scheme)?,
            dissipation: 0.0,
            rows: Vec::new(),
        };
        ledger.push(initial, e0);
        Ok(ledger)
    }

    fn push(&mut self, state: &State, energy: f64) {
        self.rows.push(EnergyRow {
            time: state.time,
            energy_ns: energy,
            dissipation_cum: self.dissipation,
            energy_budget_residual: energy + self.dissipation - self.initial,
            mass: state.mass(),
            momentum: state.total_momentum(),
        });
    }

    /// Accumulates dissipation over the step; appends a row when `record`.
    pub fn observe(&mut self, event: &StepEvent, record: bool) -> Result<()> {
        let rate = dissipation_rate(event.after, &self.params, self.scheme)?;
        self.dissipation += 0.5 * event.dt * (self.last_rate + rate);
        self.last_rate = rate;
        if record {
            let e = energy_ns(event.after, &self.params)?;
            self.push(event.after, e);
        }
        Ok(())
    }

    /// Appends a row for `state` without advancing the dissipation integral;
    /// `state` must be the most recently observed one.
    pub fn record(&mut self, state: &State) -> Result<()> {
        let e = energy_ns(state, &self.params)?;
        self.push(state, e);
        Ok(())
    }

    pub fn initial_energy(&self) -> f64 {
        self.initial
    }

    pub fn dissipation(&self) -> f64 {
        self.dissipation
    }

    pub fn rows(&self) -> &[EnergyRow] {
        &self.rows
    }

    pub fn max_budget_residual(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.energy_budget_residual)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
