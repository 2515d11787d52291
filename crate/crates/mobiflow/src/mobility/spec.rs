//! Mobility functions: concave densities-to-weights maps m on [0, M).
//!
//! Case A is an unbounded domain (M = +inf, m nondecreasing); case B caps
//! densities at a finite threshold M. Concavity is the structural invariant
//! everything else relies on (joint convexity of the action density), so
//! construction validates it and tabulated data is projected onto concavity
//! before interpolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::pchip::Pchip;

/// The enumerated mobility families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MobilityKind {
    /// m(r) = r^alpha on [0, +inf), alpha in [0, 1].
    PowerLaw { alpha: f64 },
    /// m(r) = r (M - r) on [0, M].
    Logistic { threshold: f64 },
    /// m(r) = r^alpha0 (M - r)^alpha1 on [0, M], exponents in (0, 1].
    PowerProduct {
        alpha0: f64,
        alpha1: f64,
        threshold: f64,
    },
    /// m(r) = c > 0.
    Constant { value: f64 },
    /// m(r) = offset + slope * r with offset, slope >= 0.
    Affine { offset: f64, slope: f64 },
    /// Concave interpolation of (r_i, m_i) samples starting at r = 0.
    Tabulated { samples: Vec<(f64, f64)> },
}

/// A validated mobility with its derivatives and domain data.
#[derive(Debug, Clone)]
pub struct MobilitySpec {
    kind: MobilityKind,
    threshold: f64,
    monotone_up_to: f64,
    tab: Option<Pchip>,
}

impl MobilitySpec {
    pub fn new(kind: MobilityKind) -> Result<Self> {
        let spec = match &kind {
            MobilityKind::PowerLaw { alpha } => {
                if !(0.0..=1.0).contains(alpha) {
                    return Err(Error::InvalidSpec(format!(
                        "power-law exponent must lie in [0, 1] for concavity, got {alpha}"
                    )));
                }
                MobilitySpec {
                    kind,
                    threshold: f64::INFINITY,
                    monotone_up_to: f64::INFINITY,
                    tab: None,
                }
            }
            MobilityKind::Logistic { threshold } => {
                if !(*threshold > 0.0) {
                    return Err(Error::InvalidSpec("logistic threshold must be positive".into()));
                }
                MobilitySpec {
                    threshold: *threshold,
                    monotone_up_to: 0.5 * threshold,
                    kind,
                    tab: None,
                }
            }
            MobilityKind::PowerProduct {
                alpha0,
                alpha1,
                threshold,
            } => {
                if !(*threshold > 0.0) || !(0.0..=1.0).contains(alpha0) || !(0.0..=1.0).contains(alpha1) {
                    return Err(Error::InvalidSpec(
                        "power-product needs threshold > 0 and exponents in (0, 1]".into(),
                    ));
                }
                let peak = alpha0 * threshold / (alpha0 + alpha1);
                MobilitySpec {
                    threshold: *threshold,
                    monotone_up_to: peak,
                    kind,
                    tab: None,
                }
            }
            MobilityKind::Constant { value } => {
                if !(*value > 0.0) {
                    return Err(Error::InvalidSpec("constant mobility must be positive".into()));
                }
                MobilitySpec {
                    kind,
                    threshold: f64::INFINITY,
                    monotone_up_to: f64::INFINITY,
                    tab: None,
                }
            }
            MobilityKind::Affine { offset, slope } => {
                if *offset < 0.0 || *slope < 0.0 || (*offset == 0.0 && *slope == 0.0) {
                    return Err(Error::InvalidSpec(
                        "affine mobility needs offset, slope >= 0 and not both zero".into(),
                    ));
                }
                MobilitySpec {
                    kind,
                    threshold: f64::INFINITY,
                    monotone_up_to: f64::INFINITY,
                    tab: None,
                }
            }
            MobilityKind::Tabulated { samples } => build_tabulated(samples, kind.clone())?,
        };
        spec.validate_concavity()?;
        Ok(spec)
    }

    /// Sample a closure on [0, r_max] and build a tabulated mobility from it.
    pub fn tabulated_from_fn(f: impl Fn(f64) -> f64, r_max: f64, n: usize) -> Result<Self> {
        assert!(n >= 3 && r_max > 0.0);
        let samples: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let r = r_max * i as f64 / (n - 1) as f64;
                (r, f(r))
            })
            .collect();
        MobilitySpec::new(MobilityKind::Tabulated { samples })
    }

    pub fn kind(&self) -> &MobilityKind {
        &self.kind
    }

    /// Right end M of the domain [0, M); +inf in case A.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Largest M-up such that m is nondecreasing on [0, M-up].
    pub fn monotone_up_to(&self) -> f64 {
        self.monotone_up_to
    }

    pub fn is_case_a(&self) -> bool {
        self.threshold.is_infinite()
    }

    /// m(r), evaluated with the argument clamped to [0, M].
    pub fn m(&self, r: f64) -> f64 {
        let r = self.clamp(r);
        match &self.kind {
            MobilityKind::PowerLaw { alpha } => power(r, *alpha),
            MobilityKind::Logistic { threshold } => r * (threshold - r),
            MobilityKind::PowerProduct {
                alpha0,
                alpha1,
                threshold,
            } => power(r, *alpha0) * power(threshold - r, *alpha1),
            MobilityKind::Constant { value } => *value,
            MobilityKind::Affine { offset, slope } => offset + slope * r,
            MobilityKind::Tabulated { .. } => self.tab.as_ref().unwrap().eval(r).max(0.0),
        }
    }

    /// m'(r); may be +inf at r = 0 for degenerate power laws.
    pub fn m_prime(&self, r: f64) -> f64 {
        let r = self.clamp(r);
        match &self.kind {
            MobilityKind::PowerLaw { alpha } => {
                if *alpha == 1.0 {
                    1.0
                } else if *alpha == 0.0 {
                    0.0
                } else {
                    alpha * power(r, alpha - 1.0)
                }
            }
            MobilityKind::Logistic { threshold } => threshold - 2.0 * r,
            MobilityKind::PowerProduct {
                alpha0,
                alpha1,
                threshold,
            } => {
                alpha0 * power(r, alpha0 - 1.0) * power(threshold - r, *alpha1)
                    - alpha1 * power(r, *alpha0) * power(threshold - r, alpha1 - 1.0)
            }
            MobilityKind::Constant { .. } => 0.0,
            MobilityKind::Affine { slope, .. } => *slope,
            MobilityKind::Tabulated { .. } => self.tab.as_ref().unwrap().eval_d1(r),
        }
    }

    /// m''(r); nonpositive wherever defined.
    pub fn m_second(&self, r: f64) -> f64 {
        let r = self.clamp(r);
        match &self.kind {
            MobilityKind::PowerLaw { alpha } => {
                if *alpha == 1.0 || *alpha == 0.0 {
                    0.0
                } else {
                    alpha * (alpha - 1.0) * power(r, alpha - 2.0)
                }
            }
            MobilityKind::Logistic { .. } => -2.0,
            MobilityKind::PowerProduct {
                alpha0,
                alpha1,
                threshold,
            } => {
                let a0 = *alpha0;
                let a1 = *alpha1;
                a0 * (a0 - 1.0) * power(r, a0 - 2.0) * power(threshold - r, a1)
                    - 2.0 * a0 * a1 * power(r, a0 - 1.0) * power(threshold - r, a1 - 1.0)
                    + a1 * (a1 - 1.0) * power(r, a0) * power(threshold - r, a1 - 2.0)
            }
            MobilityKind::Constant { .. } | MobilityKind::Affine { .. } => 0.0,
            MobilityKind::Tabulated { .. } => self.tab.as_ref().unwrap().eval_d2(r),
        }
    }

    /// Slope at infinity m'(+inf) = lim m(r)/r; zero means sublinear growth.
    pub fn slope_at_infinity(&self) -> f64 {
        match &self.kind {
            MobilityKind::PowerLaw { alpha } => {
                if *alpha == 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            MobilityKind::Affine { slope, .. } => *slope,
            MobilityKind::Constant { .. } => 0.0,
            MobilityKind::Tabulated { .. } => {
                if self.is_case_a() {
                    let tab = self.tab.as_ref().unwrap();
                    tab.slope.last().copied().unwrap_or(0.0).max(0.0)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    }

    /// True when m'' vanishes identically (affine families).
    pub fn is_linear(&self) -> bool {
        match &self.kind {
            MobilityKind::Constant { .. } | MobilityKind::Affine { .. } => true,
            MobilityKind::PowerLaw { alpha } => *alpha == 1.0 || *alpha == 0.0,
            _ => false,
        }
    }

    fn clamp(&self, r: f64) -> f64 {
        r.max(0.0).min(self.threshold)
    }

    /// Chord test of concavity on sampled triples.
    ///
    /// Tabulated kinds are checked at their knots (where the projected data
    /// is concave by construction); closed-form kinds on a dense grid.
    pub fn validate_concavity(&self) -> Result<()> {
        let pts = self.concavity_sample_points();
        let max_m = pts.iter().map(|r| self.m(*r).abs()).fold(0.0, f64::max);
        let tol = 1e-12 * max_m.max(1e-300);
        for w in pts.windows(3) {
            let (r1, r2, r3) = (w[0], w[1], w[2]);
            let theta = (r2 - r1) / (r3 - r1);
            let chord = (1.0 - theta) * self.m(r1) + theta * self.m(r3);
            let defect = chord - self.m(r2);
            if defect > tol {
                return Err(Error::NonConcaveMobility { at: r2, defect });
            }
        }
        // Positivity on the interior.
        for r in &pts {
            if *r > 0.0 && *r < self.threshold && !(self.m(*r) > 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "mobility must be strictly positive on (0, M); m({r}) = {}",
                    self.m(*r)
                )));
            }
        }
        Ok(())
    }

    fn concavity_sample_points(&self) -> Vec<f64> {
        if let Some(tab) = &self.tab {
            return tab.x.clone();
        }
        let hi = if self.is_case_a() {
            1e3
        } else {
            self.threshold * (1.0 - 1e-9)
        };
        let mut pts: Vec<f64> = crate::num::quad::log_grid(hi * 1e-9, hi, 257);
        pts.insert(0, 0.0);
        pts
    }
}

fn power(base: f64, exp: f64) -> f64 {
    // Fast paths cover the exponents the solvers hammer on.
    if exp == 1.0 {
        base
    } else if exp == 0.0 {
        1.0
    } else if exp == 0.5 {
        base.sqrt()
    } else if exp == 2.0 {
        base * base
    } else if base == 0.0 {
        if exp > 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        base.powf(exp)
    }
}

fn build_tabulated(samples: &[(f64, f64)], kind: MobilityKind) -> Result<MobilitySpec> {
    if samples.len() < 3 {
        return Err(Error::InvalidSpec("tabulated mobility needs >= 3 samples".into()));
    }
    if samples[0].0 != 0.0 {
        return Err(Error::InvalidSpec("tabulated samples must start at r = 0".into()));
    }
    let x: Vec<f64> = samples.iter().map(|s| s.0).collect();
    if !x.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidSpec("tabulated sample abscissae must increase".into()));
    }
    let mut y: Vec<f64> = samples.iter().map(|s| s.1).collect();
    if y.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidSpec("tabulated mobility values must be nonnegative".into()));
    }
    project_concave(&x, &mut y);

    let tab = Pchip::new(x.clone(), y.clone());
    // Domain end: linear extension with the terminal slope. A negative end
    // slope drives m to zero at a finite radius, which becomes the threshold.
    let end_slope = *tab.slope.last().unwrap();
    let (threshold, monotone_up_to);
    if end_slope >= 0.0 {
        threshold = f64::INFINITY;
        monotone_up_to = first_decrease(&x, &y).unwrap_or(f64::INFINITY);
    } else {
        let x_last = *x.last().unwrap();
        let y_last = *y.last().unwrap();
        threshold = x_last + y_last / (-end_slope);
        monotone_up_to = first_decrease(&x, &y).unwrap_or(x_last);
    }
    Ok(MobilitySpec {
        kind,
        threshold,
        monotone_up_to,
        tab: Some(tab),
    })
}

/// Clip positive second divided differences by raising interior points to the
/// chord; iterating to a fixed point yields the least concave majorant.
fn project_concave(x: &[f64], y: &mut [f64]) {
    let n = x.len();
    for _ in 0..n {
        let mut changed = false;
        for i in 1..n - 1 {
            let theta = (x[i] - x[i - 1]) / (x[i + 1] - x[i - 1]);
            let chord = (1.0 - theta) * y[i - 1] + theta * y[i + 1];
            if y[i] < chord {
                y[i] = chord;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

fn first_decrease(x: &[f64], y: &[f64]) -> Option<f64> {
    for i in 0..y.len() - 1 {
        if y[i + 1] < y[i] {
            return Some(x[i]);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_cases() {
        let m = MobilitySpec::new(MobilityKind::PowerLaw { alpha: 0.5 }).unwrap();
        assert!(m.is_case_a());
        assert_eq!(m.m(4.0), 2.0);
        assert!((m.m_prime(4.0) - 0.25).abs() < 1e-15);
        assert!(m.m_second(4.0) < 0.0);
        assert!(MobilitySpec::new(MobilityKind::PowerLaw { alpha: 1.5 }).is_err());
    }

    #[test]
    fn logistic_threshold_and_peak() {
        let m = MobilitySpec::new(MobilityKind::Logistic { threshold: 1.0 }).unwrap();
        assert!(!m.is_case_a());
        assert_eq!(m.threshold(), 1.0);
        assert_eq!(m.monotone_up_to(), 0.5);
        assert_eq!(m.m(0.0), 0.0);
        assert_eq!(m.m(1.0), 0.0);
        assert!((m.m(0.5) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn monotone_prefix_invariant() {
        // m nondecreasing on [0, M-up] for every kind.
        let kinds = vec![
            MobilityKind::PowerLaw { alpha: 0.7 },
            MobilityKind::Logistic { threshold: 2.0 },
            MobilityKind::PowerProduct {
                alpha0: 0.5,
                alpha1: 1.0,
                threshold: 3.0,
            },
        ];
        for kind in kinds {
            let m = MobilitySpec::new(kind).unwrap();
            let up = m.monotone_up_to().min(10.0);
            let mut prev = m.m(0.0);
            for i in 1..=200 {
                let r = up * i as f64 / 200.0;
                let v = m.m(r);
                assert!(v >= prev - 1e-12, "{:?} decreases before M-up", m.kind());
                prev = v;
            }
        }
    }

    #[test]
    fn tabulated_projects_to_concavity() {
        // A dent in otherwise concave sqrt data gets raised to the chord.
        let mut samples: Vec<(f64, f64)> = (0..30)
            .map(|i| {
                let r = i as f64 * 0.1;
                (r, r.sqrt())
            })
            .collect();
        samples[10].1 *= 0.5;
        let m = MobilitySpec::new(MobilityKind::Tabulated { samples }).unwrap();
        m.validate_concavity().unwrap();
        assert!(m.m(1.0) > 0.9);
    }

    #[test]
    fn tabulated_rational_matches_closure() {
        let m = MobilitySpec::tabulated_from_fn(|r| r / (1.0 + r), 20.0, 2000).unwrap();
        for &r in &[0.1, 0.5, 1.0, 2.0, 7.5] {
            assert!((m.m(r) - r / (1.0 + r)).abs() < 1e-6, "at {r}");
            assert!((m.m_prime(r) - 1.0 / (1.0 + r).powi(2)).abs() < 1e-4);
        }
    }
}
