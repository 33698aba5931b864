use crate::diagnostics::symmetric_eigenvalues;
use crate::error::{invalid, Result};
use crate::fields::{gaussian_smooth, integrate, Grid, ScalarField, TensorField};
use crate::fluid::{FluidParams, State};

/// Mollification-gap estimates of the Reynolds and pressure defects at scale
/// `ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectEstimate {
    pub scale: f64,
    pub conv: TensorField,
    pub press: ScalarField,
}

impl DefectEstimate {
    pub fn new(scale: f64, conv: TensorField, press: ScalarField) -> Result<Self> {
        conv.grid().check_same(press.grid())?;
        Ok(Self { scale, conv, press })
    }

    pub fn zero(grid: &Grid, scale: f64) -> Self {
        Self {
            scale,
            conv: TensorField::zeros(grid),
            press: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.press.grid()
    }

    /// `∫ tr R_conv`.
    pub fn conv_trace_integral(&self) -> f64 {
        integrate(&self.conv.trace())
    }

    /// `∫ R_press`.
    pub fn press_integral(&self) -> f64 {
        integrate(&self.press)
    }

    pub fn min_press(&self) -> f64 {
        self.press.min()
    }

    /// Smallest eigenvalue of the Reynolds defect over all cells.
    pub fn min_conv_eigenvalue(&self) -> f64 {
        let dim = self.conv.dim();
        (0..self.grid().len())
            .map(|i| symmetric_eigenvalues(&self.conv.at(i), dim)[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Single-state defect estimate.
pub fn defect_estimate(state: &State, scale: f64, params: &FluidParams) -> Result<DefectEstimate> {
    defect_estimate_ensemble(std::slice::from_ref(state), scale, params)
}

/// Ensemble estimate: realization averages of the mollified quantities are
/// formed before the nonlinear gap is taken.
///
/// `R_conv = ⟨G*(m⊗m/ρ)⟩ − ⟨G*m⟩⊗⟨G*m⟩/⟨G*ρ⟩`,
/// `R_press = ⟨G*p(ρ)⟩ − p(⟨G*ρ⟩)`.
pub fn defect_estimate_ensemble(
    states: &[State],
    scale: f64,
    params: &FluidParams,
) -> Result<DefectEstimate> {
    let first = states
        .first()
        .ok_or_else(|| invalid("states", "need at least one state"))?;
    let grid = first.grid().clone();
    let dim = grid.dim();
    let n = grid.len();
    let pairs: Vec<(usize, usize)> = (0..dim)
        .flat_map(|i| (i..dim).map(move |j| (i, j)))
        .collect();
    let channels = 1 + dim + pairs.len() + 1;
    let mut sums = vec![vec![0.0; n]; channels];
    for s in states {
        grid.check_same(s.grid())?;
        s.check_floor(params)?;
        let rho = s.rho.values();
        let m: Vec<&[f64]> = s.momentum.components().iter().map(|c| c.values()).collect();
        let mut fields = vec![s.rho.clone()];
        fields.extend(s.momentum.components().iter().cloned());
        for &(i, j) in &pairs {
            let vals = (0..n).map(|x| m[i][x] * m[j][x] / rho[x]).collect();
            fields.push(ScalarField::new(&grid, vals)?);
        }
        fields.push(s.rho.map(|r| params.pressure_at(r)));
        let refs: Vec<&ScalarField> = fields.iter().collect();
        for (acc, f) in sums.iter_mut().zip(gaussian_smooth(&refs, scale)?) {
            for (a, v) in acc.iter_mut().zip(f.values()) {
                *a += v;
            }
        }
    }
    let inv = 1.0 / states.len() as f64;
    for c in sums.iter_mut() {
        for v in c.iter_mut() {
            *v *= inv;
        }
    }
    let rho_bar = &sums[0];
    let m_bar = &sums[1..1 + dim];
    let mut conv = vec![ScalarField::zeros(&grid); dim * dim];
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let flux = &sums[1 + dim + p];
        let vals: Vec<f64> = (0..n)
            .map(|x| flux[x] - m_bar[i][x] * m_bar[j][x] / rho_bar[x])
            .collect();
        let f = ScalarField::new(&grid, vals)?;
        conv[j * dim + i] = f.clone();
        conv[i * dim + j] = f;
    }
    let p_bar = &sums[channels - 1];
    let press = ScalarField::new(
        &grid,
        (0..n)
            .map(|x| p_bar[x] - params.pressure_at(rho_bar[x]))
            .collect(),
    )?;
    DefectEstimate::new(scale, TensorField::new(conv)?, press)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::VectorField;

    #[test]
    fn constant_state_has_no_defect() {
        let g = Grid::uniform(2, 16).unwrap();
        let p = FluidParams::euler(1.4, 1.0);
        let s = State::new(
            ScalarField::constant(&g, 1.2),
            VectorField::constant(&g, &[0.3, -0.1]),
            0.0,
        )
        .unwrap();
        let d = defect_estimate(&s, 0.5, &p).unwrap();
        assert!(d.press.max_abs() < 1e-13);
        assert!(d.conv.components().iter().all(|c| c.max_abs() < 1e-13));
    }

    #[test]
    fn rejects_subgrid_scale() {
        let g = Grid::uniform(2, 16).unwrap();
        let p = FluidParams::euler(1.4, 1.0);
        assert!(defect_estimate(&State::at_rest(&g, 1.0), 0.1, &p).is_err());
    }

    #[test]
    fn oscillation_gives_half_trace() {
        let g = Grid::uniform(2, 64).unwrap();
        let p = FluidParams::euler(1.4, 1.0);
        let m = VectorField::from_fn(&g, |x| vec![(16.0 * x[0]).sin(), 0.0]).unwrap();
        let s = State::new(ScalarField::constant(&g, 1.0), m, 0.0).unwrap();
        let d = defect_estimate(&s, 1.0, &p).unwrap();
        let tr = d.conv.trace();
        assert!(tr.max_diff(&ScalarField::constant(&g, 0.5)).unwrap() < 0.025);
        assert!(d.min_conv_eigenvalue() >= -1e-10);
        assert!(d.min_press() >= -1e-12);
    }
}
