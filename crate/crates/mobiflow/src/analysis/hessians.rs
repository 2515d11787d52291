//! Second derivatives of internal, potential, and interaction energies along
//! geodesics, evaluated at a (density, velocity-potential) pair by central
//! differences and midpoint quadrature.

use ndarray::Array2;
use serde::Serialize;

use crate::analysis::stencil;
use crate::error::{Error, Result};
use crate::grid::{Density, Domain};
use crate::mobility::{EnergySpec, MobilitySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    Internal,
    Potential,
    Interaction,
}

/// Named integrals of a second-derivative formula and their sum.
#[derive(Debug, Clone, Serialize)]
pub struct SecondDerivativeReport {
    pub functional: Functional,
    pub terms: Vec<(String, f64)>,
    pub total: f64,
    /// For the internal energy: the lower bound obtained after applying the
    /// pointwise Hessian inequality (nonnegative under the McCann condition).
    pub bochner_surrogate: Option<f64>,
}

impl SecondDerivativeReport {
    fn from_terms(
        functional: Functional,
        terms: Vec<(String, f64)>,
        bochner_surrogate: Option<f64>,
    ) -> Self {
        let total = terms.iter().map(|(_, v)| v).sum();
        SecondDerivativeReport {
            functional,
            terms,
            total,
            bochner_surrogate,
        }
    }
}

fn require_interior(rho: &Density, mobility: &MobilitySpec) -> Result<()> {
    if !(rho.min() > 0.0) || rho.max() >= mobility.threshold() {
        return Err(Error::DegenerateDensity);
    }
    Ok(())
}

/// d^2/ds^2 of the internal energy at (rho, psi):
///   T1 = int (P'm - H)(Lap psi)^2
///   T2 = int H (-grad psi . grad Lap psi + Lap |grad psi|^2 / 2)
///   T3 = -1/2 int P'm'' |grad rho|^2 |grad psi|^2
/// plus the Bochner surrogate
///   int (P'm - (1-1/d)H)(Lap psi)^2 + T3.
pub fn internal_hessian(
    rho: &Density,
    psi: &Density,
    energy: &EnergySpec,
    mobility: &MobilitySpec,
) -> Result<SecondDerivativeReport> {
    require_interior(rho, mobility)?;
    let domain = rho.domain;
    let d = domain.dim as f64;

    let lap_psi = stencil::laplacian(&domain, &psi.values);
    let gpx = stencil::grad_x(&domain, &psi.values);
    let gpy = stencil::grad_y(&domain, &psi.values);
    let grx = stencil::grad_x(&domain, &rho.values);
    let gry = stencil::grad_y(&domain, &rho.values);
    let glx = stencil::grad_x(&domain, &lap_psi);
    let gly = stencil::grad_y(&domain, &lap_psi);
    let gp_sq = &gpx * &gpx + &gpy * &gpy;
    let lap_gp_sq = stencil::laplacian(&domain, &gp_sq);

    let mut t1 = Array2::zeros(rho.values.dim());
    let mut t2 = Array2::zeros(rho.values.dim());
    let mut t3 = Array2::zeros(rho.values.dim());
    let mut surrogate = Array2::zeros(rho.values.dim());
    for ((i, j), r) in rho.values.indexed_iter() {
        let pm = energy.pressure_prime(*r) * mobility.m(*r);
        let h = energy.h(*r);
        let lp = lap_psi[[i, j]];
        t1[[i, j]] = (pm - h) * lp * lp;
        let bochner_expr =
            -(gpx[[i, j]] * glx[[i, j]] + gpy[[i, j]] * gly[[i, j]]) + 0.5 * lap_gp_sq[[i, j]];
        t2[[i, j]] = h * bochner_expr;
        let grad_rho_sq = grx[[i, j]] * grx[[i, j]] + gry[[i, j]] * gry[[i, j]];
        t3[[i, j]] =
            -0.5 * energy.pressure_prime(*r) * mobility.m_second(*r) * grad_rho_sq * gp_sq[[i, j]];
        surrogate[[i, j]] = (pm - (1.0 - 1.0 / d) * h) * lp * lp + t3[[i, j]];
    }
    let terms = vec![
        ("pressure_laplacian".to_string(), stencil::integrate(&domain, &t1)),
        ("hessian_exchange".to_string(), stencil::integrate(&domain, &t2)),
        ("mobility_curvature".to_string(), stencil::integrate(&domain, &t3)),
    ];
    Ok(SecondDerivativeReport::from_terms(
        Functional::Internal,
        terms,
        Some(stencil::integrate(&domain, &surrogate)),
    ))
}

/// d^2/ds^2 of the potential energy int V d mu along the geodesic flow:
///   I  = int m m' (Hess V grad psi) . grad psi
///   II = int m m'' [ (grad rho . grad psi)(grad V . grad psi)
///                    - (grad rho . grad V) |grad psi|^2 / 2 ].
pub fn potential_hessian(
    rho: &Density,
    psi: &Density,
    v: &Density,
    mobility: &MobilitySpec,
) -> Result<SecondDerivativeReport> {
    require_interior(rho, mobility)?;
    let domain = rho.domain;
    let gpx = stencil::grad_x(&domain, &psi.values);
    let gpy = stencil::grad_y(&domain, &psi.values);
    let grx = stencil::grad_x(&domain, &rho.values);
    let gry = stencil::grad_y(&domain, &rho.values);
    let gvx = stencil::grad_x(&domain, &v.values);
    let gvy = stencil::grad_y(&domain, &v.values);
    let (vxx, vxy, vyy) = stencil::hessian(&domain, &v.values);

    let mut t1 = Array2::zeros(rho.values.dim());
    let mut t2 = Array2::zeros(rho.values.dim());
    for ((i, j), r) in rho.values.indexed_iter() {
        let m = mobility.m(*r);
        let mp = mobility.m_prime(*r);
        let mpp = mobility.m_second(*r);
        let (px, py) = (gpx[[i, j]], gpy[[i, j]]);
        let hess_v_psi_x = vxx[[i, j]] * px + vxy[[i, j]] * py;
        let hess_v_psi_y = vxy[[i, j]] * px + vyy[[i, j]] * py;
        t1[[i, j]] = m * mp * (hess_v_psi_x * px + hess_v_psi_y * py);
        let grad_rho_psi = grx[[i, j]] * px + gry[[i, j]] * py;
        let grad_v_psi = gvx[[i, j]] * px + gvy[[i, j]] * py;
        let grad_rho_v = grx[[i, j]] * gvx[[i, j]] + gry[[i, j]] * gvy[[i, j]];
        let psi_sq = px * px + py * py;
        t2[[i, j]] = m * mpp * (grad_rho_psi * grad_v_psi - 0.5 * grad_rho_v * psi_sq);
    }
    let terms = vec![
        ("hess_v".to_string(), stencil::integrate(&domain, &t1)),
        ("mobility_curvature".to_string(), stencil::integrate(&domain, &t2)),
    ];
    Ok(SecondDerivativeReport::from_terms(
        Functional::Potential,
        terms,
        None,
    ))
}

/// Interaction kernel W sampled on the 1d difference grid together with its
/// first two derivatives.
#[derive(Debug, Clone)]
pub struct DifferenceKernel {
    pub w: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    n: usize,
}

impl DifferenceKernel {
    /// Sample w and derivatives at differences (i - j) dx, i, j in 0..nx.
    pub fn from_fn(
        domain: &Domain,
        w: impl Fn(f64) -> f64,
        w1: impl Fn(f64) -> f64,
        w2: impl Fn(f64) -> f64,
    ) -> Self {
        let n = domain.nx;
        let dx = domain.dx();
        let len = 2 * n - 1;
        let at = |k: usize| (k as f64 - (n as f64 - 1.0)) * dx;
        DifferenceKernel {
            w: (0..len).map(|k| w(at(k))).collect(),
            w1: (0..len).map(|k| w1(at(k))).collect(),
            w2: (0..len).map(|k| w2(at(k))).collect(),
            n,
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i + (self.n - 1) - j
    }
}

/// d^2/ds^2 of the 1d interaction energy
/// (three double integrals, O(n^2) tensor quadrature):
///   J1 =  iint m(rho_x) m'(rho_x) rho_y psi_x(x)^2 W''(x-y)
///   J2 = -iint m(rho_x) m(rho_y) psi_x(y) W''(x-y) psi_x(x)
///   J3 = 1/2 iint m(rho_x) m''(rho_x) rho_y rho_x'(x) psi_x(x)^2 W'(x-y).
pub fn interaction_hessian(
    rho: &Density,
    psi: &Density,
    kernel: &DifferenceKernel,
    mobility: &MobilitySpec,
) -> Result<SecondDerivativeReport> {
    if rho.domain.dim != 1 {
        return Err(Error::InvalidSpec("interaction hessian is 1d".into()));
    }
    let domain = rho.domain;
    let n = domain.nx;
    let dx = domain.dx();
    let gpsi = stencil::grad_x(&domain, &psi.values);
    let grho = stencil::grad_x(&domain, &rho.values);

    let m: Vec<f64> = (0..n).map(|i| mobility.m(rho.values[[i, 0]].max(0.0))).collect();
    let mp: Vec<f64> = (0..n).map(|i| mobility.m_prime(rho.values[[i, 0]].max(0.0))).collect();
    let mpp: Vec<f64> = (0..n).map(|i| mobility.m_second(rho.values[[i, 0]].max(0.0))).collect();

    let (mut j1, mut j2, mut j3) = (0.0, 0.0, 0.0);
    let w2 = dx * dx;
    for i in 0..n {
        let px = gpsi[[i, 0]];
        let a1 = m[i] * mp[i] * px * px;
        let a3 = 0.5 * m[i] * mpp[i] * grho[[i, 0]] * px * px;
        for j in 0..n {
            let k = kernel.idx(i, j);
            let ry = rho.values[[j, 0]];
            j1 += a1 * ry * kernel.w2[k] * w2;
            j2 -= m[i] * m[j] * gpsi[[j, 0]] * kernel.w2[k] * px * w2;
            j3 += a3 * ry * kernel.w1[k] * w2;
        }
    }
    let terms = vec![
        ("hess_w".to_string(), j1),
        ("cross".to_string(), j2),
        ("mobility_curvature".to_string(), j3),
    ];
    Ok(SecondDerivativeReport::from_terms(
        Functional::Interaction,
        terms,
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::{EnergyKind, MobilityKind};

    fn power_mob(alpha: f64) -> MobilitySpec {
        MobilitySpec::new(MobilityKind::PowerLaw { alpha }).unwrap()
    }

    fn smooth_pair(n: usize) -> (Density, Density) {
        let domain = Domain::line(n, 1.0).unwrap();
        let rho = Density::from_fn(domain, |x, _| {
            1.0 + 0.4 * (std::f64::consts::PI * x).cos()
        });
        let psi = Density::from_fn(domain, |x, _| {
            0.3 * (2.0 * std::f64::consts::PI * x).cos() + 0.1 * (std::f64::consts::PI * x).cos()
        });
        (rho, psi)
    }

    #[test]
    fn classical_case_matches_independent_route() {
        // m = r makes H = P; the hessian-exchange term can then be computed
        // through |Hess psi|^2 after integration by parts. On interior-
        // supported psi both routes agree to O(h^2).
        let domain = Domain::line(256, 1.0).unwrap();
        let bump = |x: f64, c: f64, w: f64| (-((x - c) / w).powi(2)).exp();
        let rho = Density::from_fn(domain, |x, _| 1.0 + 0.3 * bump(x, 0.5, 0.22));
        let psi = Density::from_fn(domain, |x, _| 0.2 * bump(x, 0.45, 0.08));
        let m = power_mob(1.0);
        let energy = EnergySpec::new(EnergyKind::LogEntropy, m.clone(), 1).unwrap();
        let report = internal_hessian(&rho, &psi, &energy, &m).unwrap();

        // Independent classical evaluator: T1 + int P |Hess psi|^2 (m'' = 0).
        let lap = stencil::laplacian(&domain, &psi.values);
        let h2 = stencil::hessian_norm_sq(&domain, &psi.values);
        let mut total = 0.0;
        for ((i, j), r) in rho.values.indexed_iter() {
            let pm = energy.pressure_prime(*r) * m.m(*r);
            let p = energy.pressure(*r);
            total += ((pm - p) * lap[[i, j]] * lap[[i, j]] + p * h2[[i, j]])
                * domain.cell_volume();
        }
        let scale = report.terms.iter().map(|(_, v)| v.abs()).sum::<f64>();
        assert!(
            (report.total - total).abs() < 2e-3 * scale.max(1.0),
            "{} vs {total}",
            report.total
        );
    }

    #[test]
    fn gmc_pair_has_nonnegative_bochner_surrogate() {
        let (rho, psi) = smooth_pair(128);
        let m = power_mob(0.5);
        // gamma = 0.9 >= 1 - 0.5/1 = 0.5 in d = 1.
        let energy = EnergySpec::new(
            EnergyKind::PowerPressure { gamma: 0.9, coeff: 1.0 },
            m.clone(),
            1,
        )
        .unwrap();
        let report = internal_hessian(&rho, &psi, &energy, &m).unwrap();
        assert!(report.bochner_surrogate.unwrap() > -1e-8);
    }

    #[test]
    fn degenerate_density_is_rejected() {
        let domain = Domain::line(16, 1.0).unwrap();
        let rho = Density::uniform(domain, 0.0);
        let psi = Density::uniform(domain, 1.0);
        let m = power_mob(1.0);
        let energy = EnergySpec::new(EnergyKind::LogEntropy, m.clone(), 1).unwrap();
        assert!(matches!(
            internal_hessian(&rho, &psi, &energy, &m),
            Err(Error::DegenerateDensity)
        ));
    }

    #[test]
    fn potential_linear_mobility_and_convex_v() {
        // m = r: the curvature term vanishes; convex V gives I >= 0.
        let (rho, psi) = smooth_pair(96);
        let domain = rho.domain;
        let v = Density::from_fn(domain, |x, _| (x - 0.5).powi(2));
        let m = power_mob(1.0);
        let report = potential_hessian(&rho, &psi, &v, &m).unwrap();
        let ii = report.terms[1].1;
        assert!(ii.abs() < 1e-12, "m''=0 must kill term II, got {ii}");
        assert!(report.terms[0].1 >= 0.0);
        // V constant: everything vanishes.
        let v0 = Density::uniform(domain, 3.0);
        let r0 = potential_hessian(&rho, &psi, &v0, &m).unwrap();
        assert!(r0.total.abs() < 1e-10);
    }

    #[test]
    fn interaction_classical_matches_symmetrized_oracle() {
        // m = r, W smooth: d2/ds2 = 1/2 iint rho(x)rho(y) W''(x-y)
        // (psi'(x) - psi'(y))^2, an independent algebraic route.
        let domain = Domain::line(128, 1.0).unwrap();
        let rho = Density::from_fn(domain, |x, _| {
            1.0 + 0.3 * (std::f64::consts::PI * x).cos()
        });
        let psi = Density::from_fn(domain, |x, _| {
            0.2 * (2.0 * std::f64::consts::PI * x).cos()
        });
        let m = power_mob(1.0);
        let kernel = DifferenceKernel::from_fn(
            &domain,
            |z| 0.5 * z * z,
            |z| z,
            |_| 1.0,
        );
        let report = interaction_hessian(&rho, &psi, &kernel, &m).unwrap();
        let gpsi = stencil::grad_x(&domain, &psi.values);
        let dx = domain.dx();
        let mut oracle = 0.0;
        for i in 0..domain.nx {
            for j in 0..domain.nx {
                let diff = gpsi[[i, 0]] - gpsi[[j, 0]];
                oracle += 0.5
                    * rho.values[[i, 0]]
                    * rho.values[[j, 0]]
                    * diff
                    * diff
                    * dx
                    * dx;
            }
        }
        assert!(
            (report.total - oracle).abs() < 1e-3 * oracle.abs().max(1.0),
            "{} vs {oracle}",
            report.total
        );
        // zero density or potential kills everything
        let zero = Density::uniform(domain, 0.0);
        let r0 = interaction_hessian(&zero, &psi, &kernel, &m).unwrap();
        assert_eq!(r0.total, 0.0);
        let r1 = interaction_hessian(&rho, &zero, &kernel, &m).unwrap();
        assert!(r1.total.abs() < 1e-14);
    }
}
