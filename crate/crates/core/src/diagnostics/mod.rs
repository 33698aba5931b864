//! Energies, relative energy, martingale residuals, defect estimators and
//! maximum-principle bounds.

pub mod bounds;
pub mod defect;
pub mod energy;
pub mod martingale;
pub mod relative;

pub use bounds::{max_principle_bounds, MaxPrincipleReport};
pub use defect::{defect_estimate, defect_estimate_ensemble, DefectEstimate};
pub use energy::{energy_euler_total, energy_ns, EnergyLedger, EnergyRow};
pub use martingale::{
    empirical_cross_variation, empirical_quadratic_variation, weak_residual_continuity,
    weak_residual_momentum, ContinuityProbe, DefectPolicy, MartingaleProbe, MomentumProbe,
    SampleStatistics,
};
pub use relative::{
    cancellation_residuals, gronwall_rate, relative_energy, relative_energy_rate,
    RelativeEnergyLedger,
};

/// Eigenvalues of a symmetric 2×2 or 3×3 matrix given row-major; only the
/// upper triangle is read. Returned in ascending order.
pub fn symmetric_eigenvalues(a: &[f64], dim: usize) -> Vec<f64> {
    match dim {
        2 => {
            let (p, q, r) = (a[0], a[1], a[3]);
            let mean = 0.5 * (p + r);
            let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
            vec![mean - rad, mean + rad]
        }
        3 => {
            let (a00, a01, a02, a11, a12, a22) = (a[0], a[1], a[2], a[4], a[5], a[8]);
            let off = a01 * a01 + a02 * a02 + a12 * a12;
            let mut eig = if off == 0.0 {
                vec![a00, a11, a22]
            } else {
                let q = (a00 + a11 + a22) / 3.0;
                let (b00, b11, b22) = (a00 - q, a11 - q, a22 - q);
                let p2 = b00 * b00 + b11 * b11 + b22 * b22 + 2.0 * off;
                let p = (p2 / 6.0).sqrt();
                let det = b00 * (b11 * b22 - a12 * a12) - a01 * (a01 * b22 - a12 * a02)
                    + a02 * (a01 * a12 - b11 * a02);
                let half_det = (det / (p * p * p) / 2.0).clamp(-1.0, 1.0);
                let phi = half_det.acos() / 3.0;
                let e1 = q + 2.0 * p * phi.cos();
                let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
                vec![e1, 3.0 * q - e1 - e3, e3]
            };
            eig.sort_by(f64::total_cmp);
            eig
        }
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Cumulative trapezoid integral of `values` over `times`, starting at 0.
pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for i in 0..values.len() {
        if i > 0 {
            acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        }
        out.push(acc);
    }
    out
}
