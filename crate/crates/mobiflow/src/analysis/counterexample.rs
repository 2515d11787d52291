//! The scaling counterexample defeating semiconvexity of the potential
//! energy for nonlinear mobilities.
//!
//! The profile is rho_eps = sigma(x) eta(x/eps) with a plateau step eta
//! (3/2 left of the transition, 1/2 right, linear in between, C^2 blends at
//! the former kinks) and a smooth cutoff sigma of unit integral; the test
//! potential is eta_eps itself. Term I of the second derivative scales like
//! 1/eps, term II like -1/eps^2, and the squared tangent norm like 1/eps, so
//! total + lambda * tangent^2 becomes negative for any lambda once eps is
//! small.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Density, Domain};
use crate::mobility::MobilitySpec;
use crate::num::fit::{fit_loglog, SlopeFit};

/// Width of the C^2 blends replacing the kinks of eta, in eta coordinates.
const BLEND: f64 = 0.1;

/// Quintic smoothstep and its antiderivative on [0, 1].
fn s5(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

fn s5_int(t: f64) -> f64 {
    // int_0^t s5 = t^4 (2.5 - 3 t + t^2), equal to t - 1/2 beyond 1.
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        t - 0.5
    } else {
        t * t * t * t * (2.5 + t * (-3.0 + t))
    }
}

fn s5_d1(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        30.0 * t * t * (1.0 + t * (-2.0 + t))
    }
}

/// The smoothed step eta: 3/2 for u < -1/2, 1 - u across the transition,
/// 1/2 for u > 1/2, with C^2 blends of width `BLEND` at the former kinks.
pub fn eta(u: f64) -> f64 {
    let d = BLEND;
    if u <= -0.5 - d {
        1.5
    } else if u < -0.5 + d {
        let t = (u + 0.5 + d) / (2.0 * d);
        1.5 - 2.0 * d * s5_int(t)
    } else if u <= 0.5 - d {
        1.0 - u
    } else if u < 0.5 + d {
        let t = (u - 0.5 + d) / (2.0 * d);
        (0.5 + d) - 2.0 * d * (t - s5_int(t))
    } else {
        0.5
    }
}

/// eta'(u).
pub fn eta_d1(u: f64) -> f64 {
    let d = BLEND;
    if u <= -0.5 - d || u >= 0.5 + d {
        0.0
    } else if u < -0.5 + d {
        -s5((u + 0.5 + d) / (2.0 * d))
    } else if u <= 0.5 - d {
        -1.0
    } else {
        -(1.0 - s5((u - 0.5 + d) / (2.0 * d)))
    }
}

fn eta_d2(u: f64) -> f64 {
    let d = BLEND;
    if u > -0.5 - d && u < -0.5 + d {
        -s5_d1((u + 0.5 + d) / (2.0 * d)) / (2.0 * d)
    } else if u > 0.5 - d && u < 0.5 + d {
        s5_d1((u - 0.5 + d) / (2.0 * d)) / (2.0 * d)
    } else {
        0.0
    }
}

/// Smooth cutoff: 1 on [-1/4, 1/4], quintic decay to 0 at |x| = 3/4, and
/// int sigma = 1 exactly (the transition is antisymmetric about its middle).
pub fn sigma(x: f64) -> f64 {
    let a = x.abs();
    if a <= 0.25 {
        1.0
    } else if a >= 0.75 {
        0.0
    } else {
        s5((0.75 - a) / 0.5)
    }
}

fn sigma_d1(x: f64) -> f64 {
    let a = x.abs();
    if a <= 0.25 || a >= 0.75 {
        0.0
    } else {
        let v = -s5_d1((0.75 - a) / 0.5) / 0.5;
        if x >= 0.0 {
            v
        } else {
            -v
        }
    }
}

/// Polynomial potentials V(x) = sum c_k x^k used by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Polynomial { coeffs }
    }
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
    pub fn d1(&self) -> Polynomial {
        Polynomial {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        }
    }
}

/// Default potential for the scaling runs: V(x) = -x + x^2/6.
///
/// V' = -1 + x/3 is negative on [-2, 2], which gives term II its negative
/// sign against the decreasing step (II carries sign(m'' rho_x V_x) =
/// (-)(-)(-)), and V'' = 1/3 != 0 keeps term I on its 1/eps scaling.
pub fn default_counterexample_potential() -> Polynomial {
    Polynomial::new(vec![0.0, -1.0, 1.0 / 6.0])
}

/// The profile pair (rho_eps, psi_eps) sampled on a grid and the closures
/// behind it.
pub struct CounterexampleProfile {
    pub rho: Density,
    pub psi: Density,
    pub eps: f64,
    /// Center of the domain in grid coordinates (the profile lives on
    /// [-L/2, L/2] mapped onto [0, L]).
    pub center: f64,
}

impl CounterexampleProfile {
    pub fn rho_at(&self, x_centered: f64) -> f64 {
        sigma(x_centered) * eta(x_centered / self.eps)
    }
}

/// Build the counterexample profile on a grid. The domain must resolve the
/// transition: dx <= eps / 20, and should cover [-2, 2] (length >= 4).
pub fn build_counterexample(eps: f64, domain: Domain) -> Result<CounterexampleProfile> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::InvalidSpec("eps must lie in (0, 1/4)".into()));
    }
    if domain.dim != 1 {
        return Err(Error::InvalidSpec("counterexample is 1d".into()));
    }
    if domain.dx() > eps / 20.0 {
        return Err(Error::UnresolvedEpsilon {
            eps,
            h: domain.dx(),
        });
    }
    let center = 0.5 * domain.lx;
    let rho = Density::from_fn(domain, |x, _| sigma(x - center) * eta((x - center) / eps));
    let psi = Density::from_fn(domain, |x, _| eta((x - center) / eps));
    Ok(CounterexampleProfile {
        rho,
        psi,
        eps,
        center,
    })
}

/// Scaling data across an eps-list.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub eps: Vec<f64>,
    pub term_i: Vec<f64>,
    pub term_ii: Vec<f64>,
    pub tangent_sq: Vec<f64>,
    pub total: Vec<f64>,
    pub slope_i: SlopeFit,
    pub slope_ii: SlopeFit,
    pub slope_tangent: SlopeFit,
}

impl ScalingReport {
    /// The sign and slope assertions of the construction: slopes near
    /// (-1, -2, -1), II < 0 throughout, and total < 0 at the smallest eps.
    pub fn satisfies_paper_scalings(&self) -> bool {
        self.slope_i.slope > -1.3
            && self.slope_i.slope < -0.7
            && self.slope_ii.slope > -2.3
            && self.slope_ii.slope < -1.7
            && self.slope_tangent.slope > -1.3
            && self.slope_tangent.slope < -0.7
            && self.term_ii.iter().all(|v| *v < 0.0)
            && *self.total.last().unwrap() < 0.0
    }

    /// First eps in the list at which total + lambda * tangent^2 < 0.
    pub fn lambda_defeated_at(&self, lambda: f64) -> Option<f64> {
        for ((t, g), e) in self.total.iter().zip(&self.tangent_sq).zip(&self.eps) {
            if t + lambda * g < 0.0 {
                return Some(*e);
            }
        }
        None
    }
}

/// Evaluate I_eps, II_eps and the tangent norm on an eps-list by midpoint
/// quadrature of the analytic profile. The mobility must be genuinely
/// nonlinear (m'' != 0 somewhere on [1/2, 3/2]).
pub fn counterexample_scaling(
    eps_list: &[f64],
    mobility: &MobilitySpec,
    v: &Polynomial,
) -> Result<ScalingReport> {
    if mobility.is_linear() {
        return Err(Error::MobilityLinear);
    }
    let curvature = (0..64)
        .map(|i| 0.5 + i as f64 / 63.0)
        .map(|r| mobility.m_second(r).abs())
        .fold(0.0, f64::max);
    if curvature < 1e-12 {
        return Err(Error::MobilityLinear);
    }
    let mut eps_sorted = eps_list.to_vec();
    eps_sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite eps"));
    let eps_min = *eps_sorted.last().expect("nonempty eps list");
    // One shared grid resolving the smallest transition, covering [-2, 2].
    let n = ((4.0 / (eps_min / 25.0)).ceil() as usize).next_power_of_two();
    let h = 4.0 / n as f64;
    let vp = v.d1();
    let vpp = vp.d1();

    let mut term_i = Vec::new();
    let mut term_ii = Vec::new();
    let mut tangent = Vec::new();
    let mut total = Vec::new();
    for &eps in &eps_sorted {
        let (mut i_acc, mut ii_acc, mut t_acc) = (0.0, 0.0, 0.0);
        for c in 0..n {
            let x = -2.0 + (c as f64 + 0.5) * h;
            let rho = sigma(x) * eta(x / eps);
            let rho_x = sigma_d1(x) * eta(x / eps) + sigma(x) * eta_d1(x / eps) / eps;
            let psi_x = eta_d1(x / eps) / eps;
            if psi_x == 0.0 && rho_x == 0.0 {
                continue;
            }
            let m = mobility.m(rho);
            let mp = mobility.m_prime(rho);
            let mpp = mobility.m_second(rho);
            i_acc += m * mp * vpp.eval(x) * psi_x * psi_x * h;
            ii_acc += 0.5 * m * mpp * rho_x * vp.eval(x) * psi_x * psi_x * h;
            t_acc += m * psi_x * psi_x * h;
        }
        term_i.push(i_acc);
        term_ii.push(ii_acc);
        tangent.push(t_acc);
        total.push(i_acc + ii_acc);
    }
    let slope_i = fit_loglog(&eps_sorted, &term_i);
    let slope_ii = fit_loglog(&eps_sorted, &term_ii);
    let slope_tangent = fit_loglog(&eps_sorted, &tangent);
    Ok(ScalingReport {
        eps: eps_sorted,
        term_i,
        term_ii,
        tangent_sq: tangent,
        total,
        slope_i,
        slope_ii,
        slope_tangent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::MobilityKind;
    use crate::num::quad;

    #[test]
    fn eta_hits_the_plateau_values() {
        assert_eq!(eta(-1.0), 1.5);
        assert!((eta(0.0) - 1.0).abs() < 1e-15);
        assert_eq!(eta(1.0), 0.5);
        // C^1 across the blends
        for u in [-0.62, -0.5, -0.41, 0.43, 0.5, 0.61] {
            let e = 1e-6;
            let fd = (eta(u + e) - eta(u - e)) / (2.0 * e);
            assert!((fd - eta_d1(u)).abs() < 1e-6, "at {u}");
            let fd2 = (eta_d1(u + e) - eta_d1(u - e)) / (2.0 * e);
            assert!((fd2 - eta_d2(u)).abs() < 1e-5, "at {u}");
        }
    }

    #[test]
    fn sigma_integrates_to_one() {
        let v = quad::integrate(&sigma, -1.0, 1.0, 1e-13);
        assert!((v - 1.0).abs() < 1e-12, "{v}");
        assert_eq!(sigma(0.2), 1.0);
        assert_eq!(sigma(0.9), 0.0);
    }

    #[test]
    fn profile_has_unit_mass_and_center_value_one() {
        let domain = Domain::line(4096, 4.0).unwrap();
        let profile = build_counterexample(0.05, domain).unwrap();
        assert!((profile.rho.mass() - 1.0).abs() < 1e-5);
        assert!((profile.rho_at(0.0) - 1.0).abs() < 1e-15);
        // Unresolved grid errors out.
        let coarse = Domain::line(64, 4.0).unwrap();
        assert!(matches!(
            build_counterexample(0.05, coarse),
            Err(Error::UnresolvedEpsilon { .. })
        ));
    }

    #[test]
    fn linear_mobility_is_rejected() {
        let m = MobilitySpec::new(MobilityKind::PowerLaw { alpha: 1.0 }).unwrap();
        let v = default_counterexample_potential();
        assert!(matches!(
            counterexample_scaling(&[0.1, 0.05], &m, &v),
            Err(Error::MobilityLinear)
        ));
    }

    #[test]
    fn scaling_slopes_and_signs() {
        let m = MobilitySpec::tabulated_from_fn(|r| r / (1.0 + r), 8.0, 4000).unwrap();
        let v = default_counterexample_potential();
        let eps = [0.1, 0.05, 0.025, 0.0125];
        let report = counterexample_scaling(&eps, &m, &v).unwrap();
        assert!(
            report.satisfies_paper_scalings(),
            "slopes: {} {} {}",
            report.slope_i.slope,
            report.slope_ii.slope,
            report.slope_tangent.slope
        );
        // II < 0 < I with the default (m, V).
        for (i, ii) in report.term_i.iter().zip(&report.term_ii) {
            assert!(*ii < 0.0 && *i > 0.0);
        }
        // lambda defeat: even lambda = -10 loses at some eps in the list.
        assert!(report.lambda_defeated_at(-10.0).is_some());
    }
}
