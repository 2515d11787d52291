//! Displacement-convexity scans: internal energy along computed geodesics.

use serde::Serialize;

use crate::diffusion::internal_energy;
use crate::error::{Error, Result};
use crate::geodesic::{solve_geodesic, GeodesicResult, SolverConfig};
use crate::grid::Density;
use crate::mobility::{EnergySpec, MobilitySpec};

/// Energies along the geodesic and the worst convexity violation.
#[derive(Debug, Clone, Serialize)]
pub struct ConvexityScan {
    pub s_values: Vec<f64>,
    pub energies: Vec<f64>,
    /// max_k [ U(mu_k) - ((1-s_k) U(mu_0) + s_k U(mu_1)) ].
    pub max_violation: f64,
    /// Energy spread used to normalize the violation.
    pub energy_range: f64,
    pub distance: f64,
    pub solver_iterations: usize,
}

/// Solve the geodesic between the endpoints and scan U along it.
pub fn convexity_scan(
    rho0: &Density,
    rho1: &Density,
    energy: &EnergySpec,
    mobility: &MobilitySpec,
    config: &SolverConfig,
) -> Result<ConvexityScan> {
    let geo = solve_geodesic(rho0, rho1, mobility, config)?;
    if !geo.converged {
        return Err(Error::NotConverged {
            residual: geo.constraint_residual,
        });
    }
    Ok(scan_field(&geo, energy))
}

/// Scan an already-computed geodesic.
pub fn scan_field(geo: &GeodesicResult, energy: &EnergySpec) -> ConvexityScan {
    let n_s = geo.field.n_s;
    let mut s_values = Vec::with_capacity(n_s + 1);
    let mut energies = Vec::with_capacity(n_s + 1);
    for k in 0..=n_s {
        s_values.push(k as f64 / n_s as f64);
        energies.push(internal_energy(&geo.field.density_at(k), energy));
    }
    let (e0, e1) = (energies[0], energies[n_s]);
    let mut max_violation = f64::NEG_INFINITY;
    for (s, e) in s_values.iter().zip(&energies) {
        let chord = (1.0 - s) * e0 + s * e1;
        max_violation = max_violation.max(e - chord);
    }
    let lo = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ConvexityScan {
        s_values,
        energies,
        max_violation,
        energy_range: hi - lo,
        distance: geo.distance,
        solver_iterations: geo.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{synthetic, Domain};
    use crate::mobility::{EnergyKind, MobilityKind};

    #[test]
    fn identical_endpoints_scan_flat() {
        let domain = Domain::line(24, 1.0).unwrap();
        let rho = synthetic::cosine_mixture(domain, 17, 1.0);
        let m = MobilitySpec::new(MobilityKind::PowerLaw { alpha: 1.0 }).unwrap();
        let energy = EnergySpec::new(EnergyKind::LogEntropy, m.clone(), 1).unwrap();
        let cfg = SolverConfig {
            n_s: 4,
            max_iter: 400,
            ..Default::default()
        };
        let scan = convexity_scan(&rho, &rho, &energy, &m, &cfg).unwrap();
        assert!(scan.max_violation.abs() < 1e-12);
        for w in scan.energies.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-12);
        }
    }
}
