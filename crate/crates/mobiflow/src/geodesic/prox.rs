//! Proximal map of the action density.
//!
//! prox minimizes (rho - rho~)^2/2 + |w - w~|^2/2 + tau * |w|^2/m(rho) over
//! rho in [0, M] and w. Eliminating w (w = w~ m/(m + 2 tau)) leaves the
//! scalar convex function
//!
//!   g(rho) = (rho - rho~)^2/2 + tau |w~|^2 / (m(rho) + 2 tau),
//!
//! whose derivative is driven to zero by Newton steps safeguarded with
//! bisection; concavity of m makes g'' >= 1, so the Newton direction is
//! always defined.

use crate::mobility::MobilitySpec;

/// Reduced prox: returns the optimal density and the shrink factor
/// m(rho)/(m(rho) + 2 tau) that maps w~ to w.
pub(crate) fn prox_reduced(
    rho_tilde: f64,
    w_norm: f64,
    tau: f64,
    mobility: &MobilitySpec,
) -> (f64, f64) {
    debug_assert!(tau > 0.0);
    let m_cap = mobility.threshold();
    let clamp = |r: f64| r.max(0.0).min(m_cap);
    let factor = |rho: f64| {
        let m = mobility.m(rho);
        m / (m + 2.0 * tau)
    };
    if w_norm == 0.0 {
        let rho = clamp(rho_tilde);
        return (rho, factor(rho));
    }
    let c2 = w_norm * w_norm;
    let gp = |rho: f64| {
        let m = mobility.m(rho);
        let den = m + 2.0 * tau;
        (rho - rho_tilde) - tau * c2 * mobility.m_prime(rho) / (den * den)
    };
    let gpp = |rho: f64| {
        let m = mobility.m(rho);
        let den = m + 2.0 * tau;
        let mp = mobility.m_prime(rho);
        let mpp = mobility.m_second(rho);
        1.0 - tau * c2 * (mpp * den - 2.0 * mp * mp) / (den * den * den)
    };

    // Bracket the root of g'.
    let mut lo = 0.0;
    let mut hi = if m_cap.is_finite() {
        m_cap
    } else {
        let mut h = rho_tilde.max(1.0);
        while gp(h) < 0.0 && h < 1e12 {
            h *= 2.0;
        }
        h
    };
    // Endpoint minimizers: g' keeps one sign on [0, M].
    let gp_lo = gp(1e-300_f64.max(0.0)); // evaluate at 0; m'(0) may be +inf
    let g0 = if gp_lo.is_nan() { gp(1e-30) } else { gp_lo };
    if g0 >= 0.0 {
        return (0.0, factor(0.0));
    }
    if gp(hi) <= 0.0 {
        let rho = clamp(hi);
        return (rho, factor(rho));
    }

    let tol = 1e-12 * rho_tilde.abs().max(1.0);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = gp(x);
        if f.is_finite() {
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
        } else {
            // Degenerate derivative blowup near 0: shrink from the left.
            lo = x;
        }
        if hi - lo <= tol {
            break;
        }
        let d2 = gpp(x);
        let newton = x - f / d2;
        x = if f.is_finite() && d2.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let rho = clamp(0.5 * (lo + hi));
    (rho, factor(rho))
}

/// Proximal map of tau * phi_m at (rho~, w~); the unique minimizer of
/// (rho - rho~)^2/2 + |w - w~|^2/2 + tau phi_m(rho, w).
pub fn pointwise_prox(
    rho_tilde: f64,
    w_tilde: &[f64],
    tau: f64,
    mobility: &MobilitySpec,
) -> (f64, Vec<f64>) {
    let w_norm = w_tilde.iter().map(|c| c * c).sum::<f64>().sqrt();
    let (rho, factor) = prox_reduced(rho_tilde, w_norm, tau, mobility);
    (rho, w_tilde.iter().map(|c| c * factor).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::{action_density, MobilityKind, MobilitySpec};

    fn linear() -> MobilitySpec {
        MobilitySpec::new(MobilityKind::PowerLaw { alpha: 1.0 }).unwrap()
    }

    /// Brute-force oracle: dense grid scan refined by golden-section search.
    fn prox_oracle(rho_tilde: f64, w_norm: f64, tau: f64, m: &MobilitySpec, hi: f64) -> f64 {
        let g = |rho: f64| {
            0.5 * (rho - rho_tilde).powi(2) + tau * w_norm * w_norm / (m.m(rho) + 2.0 * tau)
        };
        let n = 4_000_000usize;
        let mut best = (g(0.0), 0.0);
        for i in 1..=n {
            let r = hi * i as f64 / n as f64;
            let v = g(r);
            if v < best.0 {
                best = (v, r);
            }
        }
        // golden-section refinement around the best grid point
        let gr = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = ((best.1 - hi / n as f64).max(0.0), best.1 + hi / n as f64);
        for _ in 0..200 {
            let c = b - gr * (b - a);
            let d = a + gr * (b - a);
            if g(c) < g(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn zero_momentum_clamps() {
        let m = linear();
        let (rho, w) = pointwise_prox(0.7, &[0.0], 0.3, &m);
        assert_eq!(rho, 0.7);
        assert_eq!(w, vec![0.0]);
        let (rho, _) = pointwise_prox(-0.4, &[0.0], 0.3, &m);
        assert_eq!(rho, 0.0);
        let logistic = MobilitySpec::new(MobilityKind::Logistic { threshold: 1.0 }).unwrap();
        let (rho, _) = pointwise_prox(1.7, &[0.0], 0.3, &logistic);
        assert_eq!(rho, 1.0);
    }

    #[test]
    fn small_tau_is_nearly_the_identity() {
        let m = linear();
        for tau in [1e-4, 1e-6, 1e-8] {
            let (rho, w) = pointwise_prox(0.8, &[0.5], tau, &m);
            assert!((rho - 0.8).abs() < 50.0 * tau.sqrt(), "tau {tau}: rho {rho}");
            let shrink = m.m(rho) / (m.m(rho) + 2.0 * tau);
            assert!((w[0] - 0.5 * shrink).abs() < 1e-14);
            assert!((w[0] - 0.5).abs() < 10.0 * tau);
        }
    }

    #[test]
    fn matches_brute_force_oracle_linear_mobility() {
        // m = r, rho~ = 1, |w~| = 1, tau = 1/2. The optimality condition is
        // (rho - 1)(rho + 1)^2 = 1/2, root near 1.11205.
        let m = linear();
        let (rho, w) = pointwise_prox(1.0, &[1.0], 0.5, &m);
        let oracle = prox_oracle(1.0, 1.0, 0.5, &m, 4.0);
        assert!((rho - oracle).abs() < 1e-6, "{rho} vs oracle {oracle}");
        assert!((rho - 1.11205).abs() < 1e-4);
        assert!((w[0] - rho / (rho + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn matches_oracle_across_mobilities() {
        let cases = vec![
            MobilitySpec::new(MobilityKind::PowerLaw { alpha: 0.5 }).unwrap(),
            MobilitySpec::new(MobilityKind::Logistic { threshold: 1.0 }).unwrap(),
            MobilitySpec::new(MobilityKind::Constant { value: 2.0 }).unwrap(),
        ];
        for m in &cases {
            for &(rt, wn, tau) in &[(0.2, 0.7, 0.1), (0.9, 0.05, 1.3), (-0.3, 1.5, 0.4)] {
                let hi = m.threshold().min(5.0);
                let (rho, _) = pointwise_prox(rt, &[wn], tau, m);
                let oracle = prox_oracle(rt, wn, tau, m, hi);
                assert!(
                    (rho - oracle).abs() < 2e-6,
                    "{:?} rt={rt} wn={wn} tau={tau}: {rho} vs {oracle}",
                    m.kind()
                );
            }
        }
    }

    #[test]
    fn prox_objective_beats_nearby_points() {
        // Direct optimality: compare the full objective against perturbations.
        let m = MobilitySpec::new(MobilityKind::PowerLaw { alpha: 0.5 }).unwrap();
        let (rt, wt, tau) = (0.4, [0.8, -0.3], 0.25);
        let (rho, w) = pointwise_prox(rt, &wt, tau, &m);
        let obj = |r: f64, ww: &[f64]| {
            0.5 * (r - rt).powi(2)
                + 0.5 * ww.iter().zip(&wt).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
                + tau * action_density(&m, r, ww)
        };
        let best = obj(rho, &w);
        for dr in [-1e-3, 1e-3] {
            for dw in [-1e-3, 0.0, 1e-3] {
                let r2 = (rho + dr).max(0.0);
                let w2 = [w[0] + dw, w[1] - dw];
                assert!(obj(r2, &w2) >= best - 1e-12);
            }
        }
    }
}
