//! Implicit conservative solver for the zero-flux nonlinear diffusion flow
//! d rho/dt = Lap P(rho).
//!
//! Each step solves rho - dt * Lap_h P(rho) = rho^n by damped Newton. The
//! Laplacian acts in flux form (face differences of the cellwise pressure),
//! so mass telescopes exactly; P is extended constantly below 0 and above M,
//! which keeps the scheme monotone and the converged iterate inside the
//! invariant interval of the data.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::{Density, Domain, NeumannPoisson};
use crate::mobility::EnergySpec;
use crate::num::pcg::pcg;

/// Snapshot of the flow with its energy and dissipation.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub rho: Density,
    pub t: f64,
    /// Internal energy int U(rho).
    pub energy: f64,
    /// Dissipation int |grad P(rho)|^2 / m(rho) (face-harmonic weights).
    pub dissipation: f64,
}

impl FlowState {
    pub fn new(rho: Density, t: f64, energy: &EnergySpec) -> Self {
        let e = internal_energy(&rho, energy);
        let d = dissipation(&rho, energy);
        FlowState {
            rho,
            t,
            energy: e,
            dissipation: d,
        }
    }
}

/// Integral of U over the domain.
pub fn internal_energy(rho: &Density, energy: &EnergySpec) -> f64 {
    let vol = rho.domain.cell_volume();
    rho.values.iter().map(|r| energy.u(r.max(0.0))).sum::<f64>() * vol
}

/// Dissipation int |grad P|^2 / m with harmonic face mobilities; a face with
/// a vanishing neighbor mobility contributes zero (the 0/0 convention).
pub fn dissipation(rho: &Density, energy: &EnergySpec) -> f64 {
    let domain = &rho.domain;
    let (nx, ny) = (domain.nx, domain.ny);
    let (dx, dy) = (domain.dx(), domain.dy());
    let vol = domain.cell_volume();
    let mob = energy.mobility();
    let p: Array2<f64> = rho.values.mapv(|r| energy.pressure(r.max(0.0)));
    let m: Array2<f64> = rho.values.mapv(|r| mob.m(r.max(0.0)));
    let mut acc = 0.0;
    let face = |pa: f64, pb: f64, ma: f64, mb: f64, h: f64| -> f64 {
        if ma <= 0.0 || mb <= 0.0 {
            return 0.0;
        }
        let mh = 2.0 * ma * mb / (ma + mb);
        let g = (pb - pa) / h;
        g * g / mh
    };
    for i in 1..nx {
        for j in 0..ny {
            acc += face(p[[i - 1, j]], p[[i, j]], m[[i - 1, j]], m[[i, j]], dx) * vol;
        }
    }
    for i in 0..nx {
        for j in 1..ny {
            acc += face(p[[i, j - 1]], p[[i, j]], m[[i, j - 1]], m[[i, j]], dy) * vol;
        }
    }
    acc
}

/// Pressure with constant extension outside [0, M].
fn pressure_ext(energy: &EnergySpec, r: f64) -> f64 {
    let m_cap = energy.threshold();
    energy.pressure(r.max(0.0).min(m_cap))
}

fn pressure_prime_ext(energy: &EnergySpec, r: f64) -> f64 {
    let m_cap = energy.threshold();
    if r <= 0.0 || r >= m_cap {
        0.0
    } else {
        energy.pressure_prime(r).max(0.0)
    }
}

/// Zero-flux Laplacian of the cellwise pressure field.
fn laplacian_flux(domain: &Domain, p: &Array2<f64>) -> Array2<f64> {
    let (nx, ny) = (domain.nx, domain.ny);
    let (dx2, dy2) = (domain.dx() * domain.dx(), domain.dy() * domain.dy());
    let mut out = Array2::zeros((nx, ny));
    for i in 0..nx {
        for j in 0..ny {
            let mut acc = 0.0;
            if i > 0 {
                acc += (p[[i - 1, j]] - p[[i, j]]) / dx2;
            }
            if i + 1 < nx {
                acc += (p[[i + 1, j]] - p[[i, j]]) / dx2;
            }
            if j > 0 {
                acc += (p[[i, j - 1]] - p[[i, j]]) / dy2;
            }
            if j + 1 < ny {
                acc += (p[[i, j + 1]] - p[[i, j]]) / dy2;
            }
            out[[i, j]] = acc;
        }
    }
    out
}

/// One implicit Euler step of the flow.
pub fn step_diffusion(state: &FlowState, dt: f64, energy: &EnergySpec) -> Result<FlowState> {
    assert!(dt > 0.0, "time step must be positive");
    let domain = state.rho.domain;
    let n = domain.n_cells();
    let poisson = NeumannPoisson::new(domain);
    let rho_n = &state.rho.values;
    let mut rho = rho_n.clone();

    let residual = |r: &Array2<f64>| -> Array2<f64> {
        let p = r.mapv(|v| pressure_ext(energy, v));
        let lap = laplacian_flux(&domain, &p);
        r - rho_n - &lap.mapv(|v| dt * v)
    };
    let norm = |a: &Array2<f64>| (a.iter().map(|v| v * v).sum::<f64>()).sqrt();

    let scale = 1.0_f64.max(rho_n.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let tol = 1e-13 * (n as f64).sqrt() * scale;

    let mut f = residual(&rho);
    let mut fnorm = norm(&f);
    let mut newton_iters = 0usize;
    while fnorm > tol {
        newton_iters += 1;
        if newton_iters > 60 {
            return Err(Error::NewtonDiverged {
                t: state.t,
                residual: fnorm,
            });
        }
        // Modified Jacobian I + dt L diag(p'), regularized and symmetrized:
        // M = I + dt sqrt(p') L sqrt(p') is SPD; solve M u = sqrt(p')(-F).
        let pp: Array2<f64> = rho.mapv(|v| pressure_prime_ext(energy, v));
        let pmax = pp.iter().fold(0.0f64, |m, v| m.max(*v));
        let reg = 1e-14 * pmax.max(1e-30);
        let sq: Array2<f64> = pp.mapv(|v| (v.max(reg)).sqrt());
        let mean_pp = pp.sum() / n as f64;

        // M x = x + dt sq .* (-Lap)(sq .* x); -Lap is positive semidefinite.
        let mut apply = |x: &[f64], y: &mut [f64]| {
            let xv = Array2::from_shape_vec((domain.nx, domain.ny), x.to_vec()).unwrap();
            let scaled = &xv * &sq;
            let lap = laplacian_flux(&domain, &scaled);
            for ((yi, (xi, si)), li) in y
                .iter_mut()
                .zip(xv.iter().zip(sq.iter()))
                .zip(lap.iter())
            {
                *yi = xi - dt * si * li;
            }
        };
        let mut precond = |x: &[f64], y: &mut [f64]| {
            let xv = Array2::from_shape_vec((domain.nx, domain.ny), x.to_vec()).unwrap();
            let sol = poisson.solve_shifted(&xv, 1.0, dt * mean_pp.max(reg));
            for (yi, v) in y.iter_mut().zip(sol.iter()) {
                *yi = *v;
            }
        };
        let b: Vec<f64> = f
            .iter()
            .zip(sq.iter())
            .map(|(fv, s)| -fv * s)
            .collect();
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut u = vec![0.0; n];
        let rep = pcg(&mut apply, &mut precond, &b, &mut u, 1e-14 * (1.0 + bnorm), 800);
        if !rep.converged && rep.residual > 1e-9 * (1.0 + bnorm) {
            return Err(Error::NewtonDiverged {
                t: state.t,
                residual: rep.residual,
            });
        }
        let uv = Array2::from_shape_vec((domain.nx, domain.ny), u).unwrap();
        let delta = &uv / &sq;

        // Backtracking on ||F||.
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &rho + &delta.mapv(|v| s * v);
            let ft = residual(&trial);
            let fn_t = norm(&ft);
            if fn_t <= (1.0 - 1e-4 * s) * fnorm {
                rho = trial;
                f = ft;
                fnorm = fn_t;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonDiverged {
                t: state.t,
                residual: fnorm,
            });
        }
    }

    let rho = Density::new(domain, rho)?;
    Ok(FlowState::new(rho, state.t + dt, energy))
}

/// Evolve `steps` uniform implicit steps, returning the whole trajectory
/// (including the initial state).
pub fn evolve(state0: FlowState, dt: f64, steps: usize, energy: &EnergySpec) -> Result<Vec<FlowState>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state0);
    for _ in 0..steps {
        let next = step_diffusion(out.last().unwrap(), dt, energy)?;
        out.push(next);
    }
    Ok(out)
}

/// Defect of the energy identity
/// |U(rho_T) + int_0^T D dt - U(rho_0)| with right-endpoint quadrature.
pub fn energy_identity_residual(trajectory: &[FlowState]) -> f64 {
    if trajectory.len() < 2 {
        return 0.0;
    }
    let first = trajectory.first().unwrap();
    let last = trajectory.last().unwrap();
    let mut dissipated = 0.0;
    for w in trajectory.windows(2) {
        let dt = w[1].t - w[0].t;
        dissipated += dt * w[1].dissipation;
    }
    (last.energy + dissipated - first.energy).abs()
}

/// L1 contraction gap ||S_T a - S_T b||_1 - ||a - b||_1 (nonpositive up to
/// solver tolerance for the monotone scheme).
pub fn l1_contraction_check(
    rho0: &Density,
    rho0_tilde: &Density,
    t_end: f64,
    dt: f64,
    energy: &EnergySpec,
) -> Result<f64> {
    assert_eq!(rho0.domain, rho0_tilde.domain, "grids must match");
    let steps = (t_end / dt).round().max(1.0) as usize;
    let a = evolve(FlowState::new(rho0.clone(), 0.0, energy), dt, steps, energy)?;
    let b = evolve(
        FlowState::new(rho0_tilde.clone(), 0.0, energy),
        dt,
        steps,
        energy,
    )?;
    let after = a.last().unwrap().rho.l1_distance(&b.last().unwrap().rho);
    let before = rho0.l1_distance(rho0_tilde);
    Ok(after - before)
}
