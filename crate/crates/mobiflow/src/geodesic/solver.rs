//! Primal-dual computation of the mobility transport distance.
//!
//! The convex space-time problem min Phi(rho, w) over the continuity
//! constraint set is solved with a Chambolle-Pock iteration: the nonsmooth
//! action is composed with the staggered-to-centered interpolation operator
//! K (four-point density averages onto faces, identity on momenta), its prox
//! is the pointwise map from [`crate::geodesic::pointwise_prox`], and the
//! affine constraint is handled by exact projection each primal step.
//!
//! Stopping combines the continuity defect of the proximal momentum against
//! the current density iterate (which vanishes at the fixed point) with
//! stagnation of the action over a trailing window.

use ndarray::Array3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::project::ContinuityProjector;
use crate::geodesic::prox::prox_reduced;
use crate::grid::{
    discrete_action_clamped, interpolate_linear, ActionProfile, Density, StaggeredField,
};
use crate::mobility::MobilitySpec;

fn default_ns() -> usize {
    32
}
fn default_max_iter() -> usize {
    20_000
}
fn default_tol_constraint() -> f64 {
    1e-6
}
fn default_tol_action() -> f64 {
    1e-7
}
fn default_theta() -> f64 {
    1.0
}
fn default_window() -> usize {
    50
}
fn default_seed() -> u64 {
    0
}

/// Parameters of the primal-dual solver.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Number of time slabs.
    #[serde(default = "default_ns")]
    pub n_s: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Primal step; default 0.99 / ||K|| with ||K|| from power iteration.
    #[serde(default)]
    pub tau: Option<f64>,
    /// Dual step; default matches tau.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Continuity-defect tolerance, relative to total mass.
    #[serde(default = "default_tol_constraint")]
    pub tol_constraint: f64,
    /// Relative action stagnation over the trailing window.
    #[serde(default = "default_tol_action")]
    pub tol_action: f64,
    /// Over-relaxation parameter in [0, 1].
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_window")]
    pub stagnation_window: usize,
    /// Seed for the operator-norm power iteration.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n_s: default_ns(),
            max_iter: default_max_iter(),
            tau: None,
            sigma: None,
            tol_constraint: default_tol_constraint(),
            tol_action: default_tol_action(),
            theta: default_theta(),
            stagnation_window: default_window(),
            seed: default_seed(),
        }
    }
}

impl SolverConfig {
    pub fn with_n_s(n_s: usize) -> Self {
        SolverConfig {
            n_s,
            ..SolverConfig::default()
        }
    }
}

/// Converged geodesic data.
#[derive(Debug, Clone)]
pub struct GeodesicResult {
    pub field: StaggeredField,
    /// sqrt of the total action.
    pub distance: f64,
    pub action_profile: ActionProfile,
    /// Final continuity defect of the proximal momentum (stopping metric).
    pub constraint_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct DualState {
    /// Density duals on x-faces: (n_s, nx+1, ny).
    yrx: Array3<f64>,
    ywx: Array3<f64>,
    /// Density duals on y-faces: (n_s, nx, ny+1).
    yry: Array3<f64>,
    ywy: Array3<f64>,
}

/// Estimate ||K|| by power iteration on K^T K (50 rounds, seeded).
fn estimate_norm(domain: &crate::grid::Domain, n_s: usize, seed: u64) -> f64 {
    let (nx, ny) = (domain.nx, domain.ny);
    let mut rng = ChaCha8Rng::seed_from_u64(seed).sample_iter(rand::distributions::Uniform::new(-1.0f64, 1.0));
    let mut rho = Array3::from_shape_simple_fn((n_s + 1, nx, ny), || rng.next().unwrap());
    let mut wx = Array3::from_shape_simple_fn((n_s, nx + 1, ny), || rng.next().unwrap());
    let mut wy = Array3::from_shape_simple_fn((n_s, nx, ny + 1), || rng.next().unwrap());
    let mut norm2 = 1.0;
    for _ in 0..50 {
        // v = K z
        let mut vx = Array3::zeros((n_s, nx + 1, ny));
        let mut vy = Array3::zeros((n_s, nx, ny + 1));
        for k in 0..n_s {
            for i in 1..nx {
                for j in 0..ny {
                    vx[[k, i, j]] = 0.25
                        * (rho[[k, i - 1, j]]
                            + rho[[k, i, j]]
                            + rho[[k + 1, i - 1, j]]
                            + rho[[k + 1, i, j]]);
                }
            }
            for i in 0..nx {
                for j in 1..ny {
                    vy[[k, i, j]] = 0.25
                        * (rho[[k, i, j - 1]]
                            + rho[[k, i, j]]
                            + rho[[k + 1, i, j - 1]]
                            + rho[[k + 1, i, j]]);
                }
            }
        }
        // z' = K^T v (momentum blocks are the identity)
        let mut rho_next = Array3::zeros((n_s + 1, nx, ny));
        for k in 0..n_s {
            for i in 1..nx {
                for j in 0..ny {
                    let q = 0.25 * vx[[k, i, j]];
                    rho_next[[k, i - 1, j]] += q;
                    rho_next[[k, i, j]] += q;
                    rho_next[[k + 1, i - 1, j]] += q;
                    rho_next[[k + 1, i, j]] += q;
                }
            }
            for i in 0..nx {
                for j in 1..ny {
                    let q = 0.25 * vy[[k, i, j]];
                    rho_next[[k, i, j - 1]] += q;
                    rho_next[[k, i, j]] += q;
                    rho_next[[k + 1, i, j - 1]] += q;
                    rho_next[[k + 1, i, j]] += q;
                }
            }
        }
        let num: f64 = rho_next.iter().map(|v| v * v).sum::<f64>()
            + wx.iter().map(|v| v * v).sum::<f64>()
            + wy.iter().map(|v| v * v).sum::<f64>();
        let den: f64 = rho.iter().map(|v| v * v).sum::<f64>()
            + wx.iter().map(|v| v * v).sum::<f64>()
            + wy.iter().map(|v| v * v).sum::<f64>();
        norm2 = (num / den).sqrt();
        let scale = 1.0 / num.sqrt().max(1e-300);
        rho = rho_next.mapv(|v| v * scale);
        wx.mapv_inplace(|v| v * scale);
        wy.mapv_inplace(|v| v * scale);
    }
    norm2.sqrt().max(1.0)
}

/// Compute the mobility transport distance between two equal-mass densities
/// and a minimizing staggered geodesic.
pub fn solve_geodesic(
    rho0: &Density,
    rho1: &Density,
    mobility: &MobilitySpec,
    config: &SolverConfig,
) -> Result<GeodesicResult> {
    let m_cap = mobility.threshold();
    if m_cap.is_finite() {
        let max = rho0.max().max(rho1.max());
        if max > m_cap {
            return Err(Error::ThresholdExceeded {
                threshold: m_cap,
                max,
            });
        }
    }
    let n_s = config.n_s;
    let domain = rho0.domain;
    let mut z = interpolate_linear(rho0, rho1, n_s)?;
    let projector = ContinuityProjector::new(domain, n_s);
    let mass = rho0.mass();

    let norm = estimate_norm(&domain, n_s, config.seed);
    let tau = config.tau.unwrap_or(0.99 / norm);
    let sigma = config.sigma.unwrap_or(0.99 / norm);
    let theta = config.theta;
    let weight = domain.cell_volume() / n_s as f64;

    let (nx, ny) = (domain.nx, domain.ny);
    let mut dual = DualState {
        yrx: Array3::zeros((n_s, nx + 1, ny)),
        ywx: Array3::zeros((n_s, nx + 1, ny)),
        yry: Array3::zeros((n_s, nx, ny + 1)),
        ywy: Array3::zeros((n_s, nx, ny + 1)),
    };
    let mut wstar_x = Array3::zeros((n_s, nx + 1, ny));
    let mut wstar_y = Array3::zeros((n_s, nx, ny + 1));
    let mut zbar = z.clone();

    let mut action_hist: Vec<f64> = vec![discrete_action_clamped(&z, mobility).total];
    let mut last_residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for it in 1..=config.max_iter {
        iterations = it;
        // Dual step + prox, parallel over time slabs.
        {
            let zbar_rho = &zbar.rho;
            let zbar_wx = &zbar.wx;
            let zbar_wy = &zbar.wy;
            let slab_x = (nx + 1) * ny;
            let slab_y = nx * (ny + 1);
            let yrx = dual.yrx.as_slice_mut().unwrap();
            let ywx = dual.ywx.as_slice_mut().unwrap();
            let wsx = wstar_x.as_slice_mut().unwrap();
            yrx.par_chunks_mut(slab_x)
                .zip(ywx.par_chunks_mut(slab_x))
                .zip(wsx.par_chunks_mut(slab_x))
                .enumerate()
                .for_each(|(k, ((yr, yw), ws))| {
                    for i in 1..nx {
                        for j in 0..ny {
                            let idx = i * ny + j;
                            let rho_bar = 0.25
                                * (zbar_rho[[k, i - 1, j]]
                                    + zbar_rho[[k, i, j]]
                                    + zbar_rho[[k + 1, i - 1, j]]
                                    + zbar_rho[[k + 1, i, j]]);
                            let u_rho = yr[idx] + sigma * rho_bar;
                            let u_w = yw[idx] + sigma * zbar_wx[[k, i, j]];
                            let (rs, factor) =
                                prox_reduced(u_rho / sigma, (u_w / sigma).abs(), weight / sigma, mobility);
                            yr[idx] = u_rho - sigma * rs;
                            yw[idx] = u_w * (1.0 - factor);
                            ws[idx] = (u_w / sigma) * factor;
                        }
                    }
                });
            if ny > 1 {
                let yry = dual.yry.as_slice_mut().unwrap();
                let ywy = dual.ywy.as_slice_mut().unwrap();
                let wsy = wstar_y.as_slice_mut().unwrap();
                yry.par_chunks_mut(slab_y)
                    .zip(ywy.par_chunks_mut(slab_y))
                    .zip(wsy.par_chunks_mut(slab_y))
                    .enumerate()
                    .for_each(|(k, ((yr, yw), ws))| {
                        for i in 0..nx {
                            for j in 1..ny {
                                let idx = i * (ny + 1) + j;
                                let rho_bar = 0.25
                                    * (zbar_rho[[k, i, j - 1]]
                                        + zbar_rho[[k, i, j]]
                                        + zbar_rho[[k + 1, i, j - 1]]
                                        + zbar_rho[[k + 1, i, j]]);
                                let u_rho = yr[idx] + sigma * rho_bar;
                                let u_w = yw[idx] + sigma * zbar_wy[[k, i, j]];
                                let (rs, factor) = prox_reduced(
                                    u_rho / sigma,
                                    (u_w / sigma).abs(),
                                    weight / sigma,
                                    mobility,
                                );
                                yr[idx] = u_rho - sigma * rs;
                                yw[idx] = u_w * (1.0 - factor);
                                ws[idx] = (u_w / sigma) * factor;
                            }
                        }
                    });
            }
        }

        // Primal step: z <- project(z - tau K^T y).
        let z_old = z.clone();
        for k in 0..n_s {
            for i in 1..nx {
                for j in 0..ny {
                    let q = 0.25 * tau * dual.yrx[[k, i, j]];
                    z.rho[[k, i - 1, j]] -= q;
                    z.rho[[k, i, j]] -= q;
                    z.rho[[k + 1, i - 1, j]] -= q;
                    z.rho[[k + 1, i, j]] -= q;
                    z.wx[[k, i, j]] -= tau * dual.ywx[[k, i, j]];
                }
            }
            for i in 0..nx {
                for j in 1..ny {
                    let q = 0.25 * tau * dual.yry[[k, i, j]];
                    z.rho[[k, i, j - 1]] -= q;
                    z.rho[[k, i, j]] -= q;
                    z.rho[[k + 1, i, j - 1]] -= q;
                    z.rho[[k + 1, i, j]] -= q;
                    z.wy[[k, i, j]] -= tau * dual.ywy[[k, i, j]];
                }
            }
        }
        projector.project(&mut z, rho0, rho1);

        // Over-relaxation.
        for (zb, (zn, zo)) in zbar
            .rho
            .iter_mut()
            .zip(z.rho.iter().zip(z_old.rho.iter()))
        {
            *zb = zn + theta * (zn - zo);
        }
        for (zb, (zn, zo)) in zbar.wx.iter_mut().zip(z.wx.iter().zip(z_old.wx.iter())) {
            *zb = zn + theta * (zn - zo);
        }
        for (zb, (zn, zo)) in zbar.wy.iter_mut().zip(z.wy.iter().zip(z_old.wy.iter())) {
            *zb = zn + theta * (zn - zo);
        }

        // Stopping: continuity defect of the proximal momentum against the
        // current density iterate, plus action stagnation.
        let mut probe = z.clone();
        probe.wx.assign(&wstar_x);
        probe.wy.assign(&wstar_y);
        last_residual = projector.defect_norm(&probe.continuity_defect());

        let action = discrete_action_clamped(&z, mobility).total;
        action_hist.push(action);
        let window = config.stagnation_window;
        if last_residual <= config.tol_constraint * mass && action_hist.len() > window {
            let prev = action_hist[action_hist.len() - 1 - window];
            let rel = (action - prev).abs() / action.abs().max(1e-30);
            if rel <= config.tol_action || action.abs() <= 1e-28 {
                converged = true;
                break;
            }
        }
    }

    let action_profile = discrete_action_clamped(&z, mobility);
    let distance = action_profile.total.max(0.0).sqrt();
    Ok(GeodesicResult {
        field: z,
        distance,
        action_profile,
        constraint_residual: last_residual,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{synthetic, Domain};
    use crate::mobility::MobilityKind;

    fn linear() -> MobilitySpec {
        MobilitySpec::new(MobilityKind::PowerLaw { alpha: 1.0 }).unwrap()
    }

    #[test]
    fn identical_endpoints_have_zero_distance() {
        let domain = Domain::line(16, 1.0).unwrap();
        let rho = synthetic::cosine_mixture(domain, 1, 1.0);
        let cfg = SolverConfig {
            n_s: 4,
            max_iter: 300,
            ..Default::default()
        };
        let out = solve_geodesic(&rho, &rho, &linear(), &cfg).unwrap();
        assert!(out.converged);
        assert!(out.distance < 1e-9, "distance {}", out.distance);
    }

    #[test]
    fn case_b_threshold_violation_is_rejected() {
        let domain = Domain::line(8, 1.0).unwrap();
        let logistic = MobilitySpec::new(MobilityKind::Logistic { threshold: 1.0 }).unwrap();
        let rho0 = Density::uniform(domain, 1.2);
        let rho1 = Density::uniform(domain, 1.2);
        assert!(matches!(
            solve_geodesic(&rho0, &rho1, &logistic, &SolverConfig::with_n_s(2)),
            Err(Error::ThresholdExceeded { .. })
        ));
    }

    #[test]
    fn constant_mobility_matches_h_neg1_oracle() {
        // For m = 1 the optimal momentum is slab-independent and the
        // distance^2 equals int F^2 dx with F the cumulative difference.
        let domain = Domain::line(64, 1.0).unwrap();
        let rho0 = synthetic::cosine_mixture(domain, 21, 1.0);
        let rho1 = synthetic::cosine_mixture(domain, 22, 1.0);
        let m = MobilitySpec::new(MobilityKind::Constant { value: 1.0 }).unwrap();
        let cfg = SolverConfig {
            n_s: 8,
            max_iter: 4000,
            ..Default::default()
        };
        let out = solve_geodesic(&rho0, &rho1, &m, &cfg).unwrap();
        let dx = domain.dx();
        let mut acc = 0.0;
        let mut oracle = 0.0;
        for i in 0..domain.nx - 1 {
            acc += (rho1.values[[i, 0]] - rho0.values[[i, 0]]) * dx;
            oracle += acc * acc * dx;
        }
        assert!(out.converged, "residual {}", out.constraint_residual);
        let d2 = out.distance * out.distance;
        assert!(
            (d2 - oracle).abs() < 0.02 * oracle,
            "{d2} vs oracle {oracle}"
        );
    }

    #[test]
    fn distance_is_symmetric() {
        let domain = Domain::line(48, 1.0).unwrap();
        let rho0 = synthetic::cosine_mixture(domain, 31, 1.0);
        let rho1 = synthetic::cosine_mixture(domain, 32, 1.0);
        let cfg = SolverConfig {
            n_s: 8,
            max_iter: 6000,
            ..Default::default()
        };
        let a = solve_geodesic(&rho0, &rho1, &linear(), &cfg).unwrap();
        let b = solve_geodesic(&rho1, &rho0, &linear(), &cfg).unwrap();
        assert!(a.converged && b.converged);
        let tol = 0.02 * a.distance.max(b.distance);
        assert!((a.distance - b.distance).abs() <= tol, "{} vs {}", a.distance, b.distance);
    }
}
