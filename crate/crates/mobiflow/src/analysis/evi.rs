//! Evolution variational inequality checks in integrated form:
//! for consecutive checkpoints of a diffusion trajectory,
//!   W^2(mu_{t+dt}, nu)/2 - W^2(mu_t, nu)/2 <= dt (U(nu) - U(mu_{t+dt})),
//! up to a tolerance proportional to the distance-solver accuracy.

use serde::Serialize;

use crate::diffusion::{internal_energy, FlowState};
use crate::error::{Error, Result};
use crate::geodesic::{solve_geodesic, SolverConfig};
use crate::grid::Density;
use crate::mobility::{EnergySpec, MobilitySpec};

#[derive(Debug, Clone, Serialize)]
pub struct EviCheckpoint {
    pub t: f64,
    pub dist_sq: f64,
    /// (D_{j+1} - D_j) / 2 for the step ending here (0 at the first node).
    pub lhs: f64,
    /// dt (U(nu) - U(mu_{t_{j+1}})).
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EviReport {
    pub checkpoints: Vec<EviCheckpoint>,
    /// max over steps of lhs - rhs (nonpositive when the EVI holds exactly).
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Check the integrated EVI along `trajectory` against the reference
/// measure `nu`. `rel_tol` is the relative accuracy of the distance solver;
/// the acceptance margin is 3 rel_tol max_j D_j.
pub fn evi_check(
    trajectory: &[FlowState],
    nu: &Density,
    energy: &EnergySpec,
    mobility: &MobilitySpec,
    config: &SolverConfig,
    rel_tol: f64,
) -> Result<EviReport> {
    if trajectory.len() < 2 {
        return Err(Error::InvalidSpec("need at least two checkpoints".into()));
    }
    let u_nu = internal_energy(nu, energy);
    let mut dist_sq = Vec::with_capacity(trajectory.len());
    for state in trajectory {
        let geo = solve_geodesic(&state.rho, nu, mobility, config)?;
        if !geo.converged {
            return Err(Error::NotConverged {
                residual: geo.constraint_residual,
            });
        }
        dist_sq.push(geo.distance * geo.distance);
    }
    let d_max = dist_sq.iter().copied().fold(0.0, f64::max);
    let tolerance = 3.0 * rel_tol * d_max;

    let mut checkpoints = vec![EviCheckpoint {
        t: trajectory[0].t,
        dist_sq: dist_sq[0],
        lhs: 0.0,
        rhs: 0.0,
    }];
    let mut max_violation = f64::NEG_INFINITY;
    for j in 0..trajectory.len() - 1 {
        let dt = trajectory[j + 1].t - trajectory[j].t;
        let lhs = 0.5 * (dist_sq[j + 1] - dist_sq[j]);
        let rhs = dt * (u_nu - trajectory[j + 1].energy);
        max_violation = max_violation.max(lhs - rhs);
        checkpoints.push(EviCheckpoint {
            t: trajectory[j + 1].t,
            dist_sq: dist_sq[j + 1],
            lhs,
            rhs,
        });
    }
    Ok(EviReport {
        checkpoints,
        max_violation,
        tolerance,
        passed: max_violation <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Density, Domain};
    use crate::mobility::{EnergyKind, MobilityKind};

    #[test]
    fn stationary_state_gives_zero_both_sides() {
        let domain = Domain::line(16, 1.0).unwrap();
        let m = MobilitySpec::new(MobilityKind::PowerLaw { alpha: 1.0 }).unwrap();
        let energy = EnergySpec::new(EnergyKind::LogEntropy, m.clone(), 1).unwrap();
        let uniform = Density::uniform(domain, 1.0);
        let s0 = FlowState::new(uniform.clone(), 0.0, &energy);
        let s1 = FlowState::new(uniform.clone(), 0.01, &energy);
        let cfg = SolverConfig {
            n_s: 4,
            max_iter: 200,
            ..Default::default()
        };
        let report = evi_check(&[s0, s1], &uniform, &energy, &m, &cfg, 0.02).unwrap();
        assert!(report.passed);
        for c in &report.checkpoints {
            assert!(c.dist_sq < 1e-12 && c.lhs.abs() < 1e-12 && c.rhs.abs() < 1e-12);
        }
    }
}
