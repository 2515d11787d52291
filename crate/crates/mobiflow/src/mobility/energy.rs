//! Energy densities U and their derived functions.
//!
//! Given a convex density U and a mobility m, the derived quantities are
//!
//!   P(r)  = int_0^r m U''          (pressure; the flow solves dρ/dt = ΔP(ρ))
//!   H(r)  = H0 + int_0^r P' m'
//!   G(r)  = P'(r) m(r) - H(r)
//!
//! Closed forms are used whenever the (energy, mobility) pair admits them;
//! otherwise the primitives are tabulated once by quadrature with
//! singularity-aware panels near the endpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobility::spec::{MobilityKind, MobilitySpec};
use crate::num::pchip::Pchip;
use crate::num::quad;

fn one() -> f64 {
    1.0
}

/// A single power term of a pressure function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coeff: f64,
    pub gamma: f64,
}

/// The enumerated energy families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnergyKind {
    /// U(r) = r log r.
    LogEntropy,
    /// U(r) = coeff * r^beta.
    PowerEntropy {
        beta: f64,
        #[serde(default = "one")]
        coeff: f64,
    },
    /// Pressure-first family: P(r) = coeff * r^gamma.
    PowerPressure {
        gamma: f64,
        #[serde(default = "one")]
        coeff: f64,
    },
    /// P(r) = sum_i coeff_i r^gamma_i.
    PowerPressureSum { terms: Vec<PowerTerm> },
    /// P(r) = r - r0, i.e. U'' = 1/m (the entropy adapted to m).
    PressureLinear { r0: f64 },
    /// P'(r) = m(r)^{-1/d}: the minimal pressure admissible in dimension d.
    MinimalPressure,
}

impl EnergyKind {
    /// The paper-normalized power entropy U = r^beta / (beta - 1).
    pub fn power_entropy(beta: f64) -> Self {
        EnergyKind::PowerEntropy {
            beta,
            coeff: 1.0 / (beta - 1.0),
        }
    }
}

/// Scalar curves assembled from closed-form pieces.
#[derive(Debug, Clone)]
enum Curve {
    /// sum of c_i r^{p_i}
    Powers(Vec<(f64, f64)>),
    /// c * ln r
    Log(f64),
    /// c * r ln r
    RLogR(f64),
    /// c * (m - r) ln (m - r)
    MirrorRLogR { m: f64, c: f64 },
    /// c * ln (m - r)
    MirrorLog { m: f64, c: f64 },
    Tab(Pchip),
}

impl Curve {
    fn eval(&self, r: f64) -> f64 {
        match self {
            Curve::Powers(terms) => terms.iter().map(|(c, p)| c * powr(r, *p)).sum(),
            Curve::Log(c) => {
                if r == 0.0 {
                    -f64::INFINITY * c.signum()
                } else {
                    c * r.ln()
                }
            }
            Curve::RLogR(c) => {
                if r == 0.0 {
                    0.0
                } else {
                    c * r * r.ln()
                }
            }
            Curve::MirrorRLogR { m, c } => {
                let s = m - r;
                if s <= 0.0 {
                    0.0
                } else {
                    c * s * s.ln()
                }
            }
            Curve::MirrorLog { m, c } => {
                let s = m - r;
                if s <= 0.0 {
                    -f64::INFINITY * c.signum()
                } else {
                    c * s.ln()
                }
            }
            Curve::Tab(p) => p.eval(r),
        }
    }
}

#[derive(Debug, Clone)]
struct CurveSum(Vec<Curve>);

impl CurveSum {
    fn eval(&self, r: f64) -> f64 {
        self.0.iter().map(|c| c.eval(r)).sum()
    }
}

/// Closed or tabulated representation of H - H0.
#[derive(Debug, Clone)]
enum HForm {
    /// sum c_i r^{p_i}
    Powers(Vec<(f64, f64)>),
    /// s * P(r)
    ScaledPressure(f64),
    /// scale * m(r)^q + offset
    Mobility { q: f64, scale: f64, offset: f64 },
    Tab(Pchip),
    Zero,
    /// int_0^r P'm' diverges at 0: H is not defined as a finite primitive.
    Divergent,
}

/// An energy density bound to the mobility it was built against and an
/// ambient dimension d.
#[derive(Debug, Clone)]
pub struct EnergySpec {
    kind: EnergyKind,
    mobility: MobilitySpec,
    dim: usize,
    h0: f64,
    pressure: CurveSum,
    h_form: HForm,
    u_curve: CurveSum,
    u_prime_curve: CurveSum,
}

impl EnergySpec {
    pub fn new(kind: EnergyKind, mobility: MobilitySpec, dim: usize) -> Result<Self> {
        Self::with_h0(kind, mobility, dim, None)
    }

    /// As `new`, with an explicit H0 overriding the default selection
    /// (0 in case A, the negative part of int_0^M P'm' in case B).
    pub fn with_h0(
        kind: EnergyKind,
        mobility: MobilitySpec,
        dim: usize,
        h0_override: Option<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpec("dimension must be positive".into()));
        }
        validate_kind(&kind, &mobility, dim)?;
        let mut spec = EnergySpec {
            kind,
            mobility,
            dim,
            h0: 0.0,
            pressure: CurveSum(vec![Curve::Powers(vec![])]),
            h_form: HForm::Zero,
            u_curve: CurveSum(vec![Curve::Powers(vec![])]),
            u_prime_curve: CurveSum(vec![Curve::Powers(vec![])]),
        };
        spec.pressure = spec.build_pressure()?;
        spec.h_form = spec.build_h()?;
        spec.h0 = match h0_override {
            Some(v) => {
                if v < 0.0 {
                    return Err(Error::InvalidSpec("H0 must be nonnegative".into()));
                }
                v
            }
            None => spec.default_h0()?,
        };
        spec.build_u()?;
        Ok(spec)
    }

    pub fn kind(&self) -> &EnergyKind {
        &self.kind
    }
    pub fn mobility(&self) -> &MobilitySpec {
        &self.mobility
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn threshold(&self) -> f64 {
        self.mobility.threshold()
    }
    pub fn h0(&self) -> f64 {
        self.h0
    }

    /// U''(r) on (0, M).
    pub fn u_second(&self, r: f64) -> f64 {
        match &self.kind {
            EnergyKind::LogEntropy => 1.0 / r,
            EnergyKind::PowerEntropy { beta, coeff } => {
                coeff * beta * (beta - 1.0) * powr(r, beta - 2.0)
            }
            EnergyKind::PowerPressure { gamma, coeff } => {
                coeff * gamma * powr(r, gamma - 1.0) / self.mobility.m(r)
            }
            EnergyKind::PowerPressureSum { terms } => {
                terms
                    .iter()
                    .map(|t| t.coeff * t.gamma * powr(r, t.gamma - 1.0))
                    .sum::<f64>()
                    / self.mobility.m(r)
            }
            EnergyKind::PressureLinear { .. } => 1.0 / self.mobility.m(r),
            EnergyKind::MinimalPressure => {
                self.mobility.m(r).powf(-(1.0 + 1.0 / self.dim as f64))
            }
        }
    }

    /// P'(r) = m(r) U''(r).
    pub fn pressure_prime(&self, r: f64) -> f64 {
        match &self.kind {
            EnergyKind::LogEntropy => self.mobility.m(r) / r,
            EnergyKind::PowerEntropy { beta, coeff } => {
                coeff * beta * (beta - 1.0) * self.mobility.m(r) * powr(r, beta - 2.0)
            }
            EnergyKind::PowerPressure { gamma, coeff } => coeff * gamma * powr(r, gamma - 1.0),
            EnergyKind::PowerPressureSum { terms } => terms
                .iter()
                .map(|t| t.coeff * t.gamma * powr(r, t.gamma - 1.0))
                .sum(),
            EnergyKind::PressureLinear { .. } => 1.0,
            EnergyKind::MinimalPressure => self.mobility.m(r).powf(-1.0 / self.dim as f64),
        }
    }

    /// P''(r), using the mobility derivative where it enters.
    pub fn pressure_second(&self, r: f64) -> f64 {
        match &self.kind {
            EnergyKind::LogEntropy => (self.mobility.m_prime(r) * r - self.mobility.m(r)) / (r * r),
            EnergyKind::PowerEntropy { beta, coeff } => {
                let k = coeff * beta * (beta - 1.0);
                k * (self.mobility.m_prime(r) * powr(r, beta - 2.0)
                    + (beta - 2.0) * self.mobility.m(r) * powr(r, beta - 3.0))
            }
            EnergyKind::PowerPressure { gamma, coeff } => {
                coeff * gamma * (gamma - 1.0) * powr(r, gamma - 2.0)
            }
            EnergyKind::PowerPressureSum { terms } => terms
                .iter()
                .map(|t| t.coeff * t.gamma * (t.gamma - 1.0) * powr(r, t.gamma - 2.0))
                .sum(),
            EnergyKind::PressureLinear { .. } => 0.0,
            EnergyKind::MinimalPressure => {
                let d = self.dim as f64;
                -(1.0 / d) * self.mobility.m(r).powf(-1.0 / d - 1.0) * self.mobility.m_prime(r)
            }
        }
    }

    /// P(r) with P(0) = 0.
    pub fn pressure(&self, r: f64) -> f64 {
        self.pressure.eval(r)
    }

    /// H(r) = H0 + int_0^r P'm'; +inf when the defining integral diverges.
    pub fn h(&self, r: f64) -> f64 {
        match &self.h_form {
            HForm::Powers(t) => self.h0 + t.iter().map(|(c, p)| c * powr(r, *p)).sum::<f64>(),
            HForm::ScaledPressure(s) => self.h0 + s * self.pressure(r),
            HForm::Mobility { q, scale, offset } => {
                let mq = if *q == 1.0 {
                    self.mobility.m(r)
                } else {
                    self.mobility.m(r).powf(*q)
                };
                self.h0 + scale * mq + offset
            }
            HForm::Tab(tab) => self.h0 + tab.eval(r),
            HForm::Zero => self.h0,
            HForm::Divergent => f64::INFINITY,
        }
    }

    pub fn h_is_finite(&self) -> bool {
        !matches!(self.h_form, HForm::Divergent)
    }

    /// G(r) = P'(r) m(r) - H(r).
    pub fn g(&self, r: f64) -> f64 {
        self.pressure_prime(r) * self.mobility.m(r) - self.h(r)
    }

    /// U(r). Affine normalization is anchored per kind; affine shifts in r do
    /// not change convexity gaps or EVI sides because mass is conserved.
    pub fn u(&self, r: f64) -> f64 {
        self.u_curve.eval(r)
    }

    /// U'(r).
    pub fn u_prime(&self, r: f64) -> f64 {
        self.u_prime_curve.eval(r)
    }

    // ----- construction helpers -----

    fn power_mobility(&self) -> Option<(f64, f64)> {
        match self.mobility.kind() {
            MobilityKind::PowerLaw { alpha } => Some((1.0, *alpha)),
            MobilityKind::Constant { value } => Some((*value, 0.0)),
            _ => None,
        }
    }

    /// The pressure as an analytic power sum when (kind, mobility) allows it.
    pub fn power_pressure_terms(&self) -> Option<Vec<PowerTerm>> {
        match (&self.kind, self.power_mobility()) {
            (EnergyKind::PowerPressure { gamma, coeff }, _) => Some(vec![PowerTerm {
                coeff: *coeff,
                gamma: *gamma,
            }]),
            (EnergyKind::PowerPressureSum { terms }, _) => Some(terms.clone()),
            (EnergyKind::PressureLinear { .. }, _) => {
                Some(vec![PowerTerm { coeff: 1.0, gamma: 1.0 }])
            }
            (EnergyKind::LogEntropy, Some((m0, alpha))) => {
                if alpha > 0.0 {
                    Some(vec![PowerTerm {
                        coeff: m0 / alpha,
                        gamma: alpha,
                    }])
                } else {
                    None
                }
            }
            (EnergyKind::PowerEntropy { beta, coeff }, Some((m0, alpha))) => {
                let gamma = alpha + beta - 1.0;
                if gamma > 0.0 {
                    Some(vec![PowerTerm {
                        coeff: coeff * beta * (beta - 1.0) * m0 / gamma,
                        gamma,
                    }])
                } else {
                    None
                }
            }
            (EnergyKind::MinimalPressure, Some((m0, alpha))) => {
                let d = self.dim as f64;
                let gamma = 1.0 - alpha / d;
                Some(vec![PowerTerm {
                    coeff: m0.powf(-1.0 / d) / gamma,
                    gamma,
                }])
            }
            _ => None,
        }
    }

    fn build_pressure(&self) -> Result<CurveSum> {
        if let EnergyKind::PressureLinear { r0 } = &self.kind {
            return Ok(CurveSum(vec![Curve::Powers(vec![(1.0, 1.0), (-r0, 0.0)])]));
        }
        if let Some(terms) = self.power_pressure_terms() {
            return Ok(CurveSum(vec![Curve::Powers(
                terms.into_iter().map(|t| (t.coeff, t.gamma)).collect(),
            )]));
        }
        match (&self.kind, self.mobility.kind()) {
            (EnergyKind::LogEntropy, MobilityKind::Logistic { threshold }) => {
                // m U'' = M - r
                Ok(CurveSum(vec![Curve::Powers(vec![
                    (*threshold, 1.0),
                    (-0.5, 2.0),
                ])]))
            }
            (EnergyKind::LogEntropy, MobilityKind::Affine { offset, slope }) => {
                if *offset > 0.0 {
                    Err(Error::QuadratureDivergent { what: "pressure" })
                } else {
                    Ok(CurveSum(vec![Curve::Powers(vec![(*slope, 1.0)])]))
                }
            }
            (EnergyKind::PowerEntropy { beta, coeff }, MobilityKind::Logistic { threshold }) => {
                // m U'' = c b(b-1) (M z^{b-1} - z^b)
                let k = coeff * beta * (beta - 1.0);
                Ok(CurveSum(vec![Curve::Powers(vec![
                    (k * threshold / beta, *beta),
                    (-k / (beta + 1.0), beta + 1.0),
                ])]))
            }
            _ => {
                let f = |z: f64| self.mobility.m(z) * self.u_second(z);
                let tab = tabulate_cumulative(&f, self.tab_range(), "pressure")?;
                Ok(CurveSum(vec![Curve::Tab(tab)]))
            }
        }
    }

    fn build_h(&self) -> Result<HForm> {
        // Power pressure against a power mobility: closed power sum.
        if let (Some(terms), Some((_, alpha))) = (self.power_pressure_terms(), self.power_mobility())
        {
            if alpha == 0.0 {
                return Ok(HForm::Zero);
            }
            let mut powers = Vec::new();
            for t in &terms {
                let p = t.gamma + alpha - 1.0;
                let c = t.coeff * t.gamma * alpha;
                if p > 0.0 {
                    powers.push((c / p, p));
                } else {
                    // int_0^r z^{p-1} diverges at 0.
                    return Ok(HForm::Divergent);
                }
            }
            return Ok(HForm::Powers(powers));
        }
        match self.mobility.kind() {
            MobilityKind::Constant { .. } => Ok(HForm::Zero),
            MobilityKind::Affine { slope, .. } => Ok(HForm::ScaledPressure(*slope)),
            _ => match &self.kind {
                // P' = 1: H - H0 = m(r) - m(0).
                EnergyKind::PressureLinear { .. } => Ok(HForm::Mobility {
                    q: 1.0,
                    scale: 1.0,
                    offset: -self.mobility.m(0.0),
                }),
                // P' = m^{-1/d}: d/dr m^{1-1/d} = (1-1/d) m^{-1/d} m'.
                EnergyKind::MinimalPressure => {
                    let q = 1.0 - 1.0 / self.dim as f64;
                    Ok(HForm::Mobility {
                        q,
                        scale: 1.0 / q,
                        offset: -self.mobility.m(0.0).powf(q) / q,
                    })
                }
                _ => {
                    let f = |z: f64| self.pressure_prime(z) * self.mobility.m_prime(z);
                    match tabulate_cumulative(&f, self.tab_range(), "H") {
                        Ok(tab) => Ok(HForm::Tab(tab)),
                        Err(Error::QuadratureDivergent { .. }) => Ok(HForm::Divergent),
                        Err(e) => Err(e),
                    }
                }
            },
        }
    }

    fn default_h0(&self) -> Result<f64> {
        if self.mobility.is_case_a() {
            return Ok(0.0);
        }
        if matches!(self.h_form, HForm::Divergent) {
            return Ok(0.0);
        }
        let m = self.mobility.threshold();
        let total = self.h_minus_h0(m * (1.0 - 1e-12));
        if !total.is_finite() {
            return Err(Error::QuadratureDivergent { what: "int_0^M P'm'" });
        }
        let m_zero = self.mobility.m(0.0);
        let m_end = self.mobility.m(m * (1.0 - 1e-12));
        let p_prime_bounded = self.pressure_prime(m * 1e-9).is_finite()
            && self.pressure_prime(m * (1.0 - 1e-9)).is_finite()
            && self.pressure_prime(m * 1e-9).abs() < 1e12
            && self.pressure_prime(m * (1.0 - 1e-9)).abs() < 1e12;
        if m_zero == 0.0 && m_end.abs() < 1e-9 * m * m && p_prime_bounded {
            // Compatibility: with m vanishing at both ends and Lipschitz P,
            // the full integral of P'm' must vanish.
            let scale = (self.pressure_prime(0.5 * m).abs() * self.mobility.m(0.5 * m).abs()).max(1e-12);
            if total.abs() > 1e-6 * scale {
                return Err(Error::CompatibilityViolated { integral: total });
            }
        }
        Ok((-total).max(0.0))
    }

    /// H(r) - H0 regardless of the stored h0 (used during construction).
    fn h_minus_h0(&self, r: f64) -> f64 {
        match &self.h_form {
            HForm::Powers(t) => t.iter().map(|(c, p)| c * powr(r, *p)).sum::<f64>(),
            HForm::ScaledPressure(s) => s * self.pressure(r),
            HForm::Mobility { q, scale, offset } => scale * self.mobility.m(r).powf(*q) + offset,
            HForm::Tab(tab) => tab.eval(r),
            HForm::Zero => 0.0,
            HForm::Divergent => f64::INFINITY,
        }
    }

    fn build_u(&mut self) -> Result<()> {
        match (&self.kind, self.power_mobility()) {
            (EnergyKind::LogEntropy, _) => {
                self.u_curve = CurveSum(vec![Curve::RLogR(1.0)]);
                self.u_prime_curve =
                    CurveSum(vec![Curve::Log(1.0), Curve::Powers(vec![(1.0, 0.0)])]);
                return Ok(());
            }
            (EnergyKind::PowerEntropy { beta, coeff }, _) => {
                self.u_curve = CurveSum(vec![Curve::Powers(vec![(*coeff, *beta)])]);
                self.u_prime_curve =
                    CurveSum(vec![Curve::Powers(vec![(coeff * beta, beta - 1.0)])]);
                return Ok(());
            }
            (EnergyKind::PressureLinear { r0 }, Some((m0, alpha))) => {
                let (u, up) = anchored_power_u(1.0 / m0, alpha, *r0);
                self.u_curve = u;
                self.u_prime_curve = up;
                return Ok(());
            }
            (EnergyKind::PowerPressure { .. }, Some(pm))
            | (EnergyKind::PowerPressureSum { .. }, Some(pm))
            | (EnergyKind::MinimalPressure, Some(pm)) => {
                let (m0, alpha) = pm;
                let terms = self.power_pressure_terms().expect("power pressure");
                let mut u = Vec::new();
                let mut up = Vec::new();
                for t in &terms {
                    let k = t.coeff * t.gamma / m0;
                    let beta = t.gamma + 1.0 - alpha;
                    if beta == 1.0 {
                        u.push(Curve::RLogR(k));
                        up.push(Curve::Log(k));
                        up.push(Curve::Powers(vec![(k, 0.0)]));
                    } else if beta == 0.0 {
                        u.push(Curve::Log(-k));
                        up.push(Curve::Powers(vec![(-k, -1.0)]));
                    } else {
                        u.push(Curve::Powers(vec![(k / (beta * (beta - 1.0)), beta)]));
                        up.push(Curve::Powers(vec![(k / (beta - 1.0), beta - 1.0)]));
                    }
                }
                self.u_curve = CurveSum(u);
                self.u_prime_curve = CurveSum(up);
                return Ok(());
            }
            (EnergyKind::PressureLinear { r0 }, None) => {
                if let MobilityKind::Logistic { threshold } = self.mobility.kind() {
                    // 1/m = (1/M)(1/r + 1/(M-r)): two-sided entropy.
                    let (m, r0) = (*threshold, *r0);
                    let k = 1.0 / m;
                    self.u_curve = CurveSum(vec![
                        Curve::RLogR(k),
                        Curve::MirrorRLogR { m, c: k },
                        Curve::Powers(vec![
                            (k * ((m - r0).ln() - r0.ln()), 1.0),
                            (-(m - r0).ln(), 0.0),
                        ]),
                    ]);
                    self.u_prime_curve = CurveSum(vec![
                        Curve::Log(k),
                        Curve::MirrorLog { m, c: -k },
                        Curve::Powers(vec![(k * ((m - r0).ln() - r0.ln()), 0.0)]),
                    ]);
                    return Ok(());
                }
            }
            _ => {}
        }
        // Quadrature fallback: tabulate U' and integrate it outward from an
        // interior anchor.
        let anchor = self.u_anchor();
        let hi = self.tab_range();
        let grid: Vec<f64> = h_grid(hi)[1..].to_vec();
        let mut up = Vec::with_capacity(grid.len());
        for r in &grid {
            let v = if *r <= anchor {
                -quad::integrate(&|z| self.u_second(z), *r, anchor, 1e-11)
            } else {
                quad::integrate(&|z| self.u_second(z), anchor, *r, 1e-11)
            };
            up.push(v);
        }
        if up.iter().any(|v| !v.is_finite()) {
            return Err(Error::QuadratureDivergent { what: "U'" });
        }
        let up_tab = Pchip::new(grid.clone(), up);
        let anchor_idx = grid.iter().position(|r| *r >= anchor).unwrap_or(0);
        let mut vals = vec![0.0; grid.len()];
        let mut acc = 0.0;
        let mut prev_r = anchor;
        for i in anchor_idx..grid.len() {
            acc += quad::gl_panel(&|z| up_tab.eval(z), prev_r, grid[i]);
            vals[i] = acc;
            prev_r = grid[i];
        }
        acc = 0.0;
        prev_r = anchor;
        for i in (0..anchor_idx).rev() {
            acc -= quad::gl_panel(&|z| up_tab.eval(z), grid[i], prev_r);
            vals[i] = acc;
            prev_r = grid[i];
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::QuadratureDivergent { what: "U" });
        }
        self.u_curve = CurveSum(vec![Curve::Tab(Pchip::new(grid.clone(), vals))]);
        self.u_prime_curve = CurveSum(vec![Curve::Tab(up_tab)]);
        Ok(())
    }

    fn u_anchor(&self) -> f64 {
        if self.mobility.is_case_a() {
            1.0
        } else {
            0.5 * self.mobility.threshold()
        }
    }

    fn tab_range(&self) -> f64 {
        if self.mobility.is_case_a() {
            1e3
        } else {
            self.mobility.threshold() * (1.0 - 1e-12)
        }
    }
}

/// U for U'' = k r^{-alpha}, anchored so U(r0) = U'(r0) = 0.
fn anchored_power_u(k: f64, alpha: f64, r0: f64) -> (CurveSum, CurveSum) {
    if alpha == 1.0 {
        let r0 = r0.max(1e-300);
        (
            CurveSum(vec![
                Curve::RLogR(k),
                Curve::Powers(vec![(-k * (1.0 + r0.ln()), 1.0), (k * r0, 0.0)]),
            ]),
            CurveSum(vec![Curve::Log(k), Curve::Powers(vec![(-k * r0.ln(), 0.0)])]),
        )
    } else {
        let beta = 2.0 - alpha;
        (
            CurveSum(vec![Curve::Powers(vec![
                (k / (beta * (beta - 1.0)), beta),
                (-k * powr(r0, beta - 1.0) / (beta - 1.0), 1.0),
                (k * powr(r0, beta) / beta, 0.0),
            ])]),
            CurveSum(vec![Curve::Powers(vec![
                (k / (beta - 1.0), beta - 1.0),
                (-k * powr(r0, beta - 1.0) / (beta - 1.0), 0.0),
            ])]),
        )
    }
}

fn validate_kind(kind: &EnergyKind, mobility: &MobilitySpec, dim: usize) -> Result<()> {
    match kind {
        EnergyKind::PowerEntropy { beta, coeff } => {
            if !(*beta > 0.0) || *beta == 1.0 {
                return Err(Error::InvalidSpec(
                    "power entropy needs beta > 0, beta != 1 (use log_entropy)".into(),
                ));
            }
            if *coeff == 0.0 {
                return Err(Error::InvalidSpec(
                    "power entropy needs a nonzero coefficient".into(),
                ));
            }
        }
        EnergyKind::PowerPressure { gamma, .. } => {
            if !(*gamma > 0.0) {
                return Err(Error::InvalidSpec("pressure exponent must be positive".into()));
            }
        }
        EnergyKind::PowerPressureSum { terms } => {
            if terms.is_empty() || terms.iter().any(|t| !(t.gamma > 0.0)) {
                return Err(Error::InvalidSpec(
                    "pressure sum needs at least one term with positive exponents".into(),
                ));
            }
        }
        EnergyKind::PressureLinear { r0 } => {
            if *r0 < 0.0 || *r0 >= mobility.threshold() {
                return Err(Error::InvalidSpec("anchor r0 must lie in [0, M)".into()));
            }
            if *r0 == 0.0 {
                let probe = quad::integrate_sqrt_left(&|z| 1.0 / mobility.m(z), 1e-3, 1e-9);
                if !probe.is_finite() || probe > 1e8 {
                    return Err(Error::InvalidSpec(
                        "r0 = 0 needs 1/m integrable near 0; pick an interior anchor".into(),
                    ));
                }
            }
        }
        EnergyKind::MinimalPressure => {
            if dim <= 1 {
                return Err(Error::DimensionOne);
            }
            if !mobility.is_case_a() {
                return Err(Error::CaseBUnsupported {
                    threshold: mobility.threshold(),
                });
            }
        }
        _ => {}
    }
    // The defining integral P = int m U'' must converge at 0.
    match (kind, mobility.kind()) {
        (EnergyKind::LogEntropy, MobilityKind::Constant { .. }) => {
            return Err(Error::QuadratureDivergent { what: "pressure" });
        }
        (EnergyKind::LogEntropy, MobilityKind::Affine { offset, .. }) if *offset > 0.0 => {
            return Err(Error::QuadratureDivergent { what: "pressure" });
        }
        (EnergyKind::LogEntropy, MobilityKind::PowerLaw { alpha }) if *alpha == 0.0 => {
            return Err(Error::QuadratureDivergent { what: "pressure" });
        }
        (EnergyKind::PowerEntropy { beta, .. }, MobilityKind::PowerLaw { alpha }) => {
            if alpha + beta - 1.0 <= 0.0 {
                return Err(Error::QuadratureDivergent { what: "pressure" });
            }
        }
        (EnergyKind::PowerEntropy { beta, .. }, MobilityKind::Constant { .. }) => {
            if *beta <= 1.0 {
                return Err(Error::QuadratureDivergent { what: "pressure" });
            }
        }
        _ => {}
    }
    Ok(())
}

fn powr(r: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p == 1.0 {
        r
    } else if p == 2.0 {
        r * r
    } else if r == 0.0 {
        if p > 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        r.powf(p)
    }
}

fn h_grid(hi: f64) -> Vec<f64> {
    let mut grid = vec![0.0];
    grid.extend(quad::log_grid(hi * 1e-10, hi, 1023));
    grid
}

/// Cumulative integral from 0 on a log grid, with divergence detection via
/// shrinking left anchors.
fn tabulate_cumulative(
    f: &dyn Fn(f64) -> f64,
    hi: f64,
    what: &'static str,
) -> std::result::Result<Pchip, Error> {
    let grid = h_grid(hi);
    let inner = &grid[1..];
    let head = |lo: f64| quad::integrate(f, lo, inner[0], 1e-11);
    let with_sub = quad::integrate_sqrt_left(f, inner[0], 1e-11);
    if !with_sub.is_finite() {
        return Err(Error::QuadratureDivergent { what });
    }
    let probe = head(inner[0] * 1e-6);
    if (probe - with_sub).abs() > 1e-5 * (1.0 + with_sub.abs()) {
        let probe2 = head(inner[0] * 1e-9);
        if (probe2 - probe).abs() > 1e-7 * (1.0 + probe.abs()) {
            return Err(Error::QuadratureDivergent { what });
        }
    }
    let cum = quad::cumulative_from_zero(f, inner, 1e-11);
    if cum.iter().any(|v| !v.is_finite()) {
        return Err(Error::QuadratureDivergent { what });
    }
    let mut xs = vec![0.0];
    xs.extend_from_slice(inner);
    let mut ys = vec![0.0];
    ys.extend_from_slice(&cum);
    Ok(Pchip::new(xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::spec::{MobilityKind, MobilitySpec};

    fn power_mob(alpha: f64) -> MobilitySpec {
        MobilitySpec::new(MobilityKind::PowerLaw { alpha }).unwrap()
    }

    #[test]
    fn log_entropy_with_linear_mobility_gives_heat_pressure() {
        let e = EnergySpec::new(EnergyKind::LogEntropy, power_mob(1.0), 2).unwrap();
        // P(r) = r, H = P (since m' = 1, H' = P').
        for &r in &[0.1, 0.5, 1.0, 3.0] {
            assert!((e.pressure(r) - r).abs() < 1e-12);
            assert!((e.pressure_prime(r) - 1.0).abs() < 1e-12);
            assert!((e.h(r) - r).abs() < 1e-12);
            assert!((e.u(r) - r * r.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn pressure_matches_quadrature_of_m_u_second() {
        // Invariant: P(r) = int_0^r m U'' across kind/mobility pairs,
        // including tabulated fallbacks.
        let cases: Vec<EnergySpec> = vec![
            EnergySpec::new(EnergyKind::LogEntropy, power_mob(0.7), 2).unwrap(),
            EnergySpec::new(
                EnergyKind::PowerEntropy { beta: 2.0, coeff: 1.0 },
                power_mob(0.5),
                2,
            )
            .unwrap(),
            EnergySpec::new(
                EnergyKind::PressureLinear { r0: 0.5 },
                MobilitySpec::new(MobilityKind::Logistic { threshold: 1.0 }).unwrap(),
                2,
            )
            .unwrap(),
            EnergySpec::new(
                EnergyKind::LogEntropy,
                MobilitySpec::new(MobilityKind::Logistic { threshold: 1.0 }).unwrap(),
                3,
            )
            .unwrap(),
            EnergySpec::new(
                EnergyKind::PowerEntropy { beta: 2.0, coeff: 0.5 },
                MobilitySpec::tabulated_from_fn(|r| r / (1.0 + r), 20.0, 1500).unwrap(),
                2,
            )
            .unwrap(),
        ];
        for e in &cases {
            let hi = 0.9 * e.threshold().min(4.0);
            for i in 1..=6 {
                let r = hi * i as f64 / 6.0;
                let byquad =
                    quad::integrate_sqrt_left(&|z| e.mobility().m(z) * e.u_second(z), r, 1e-12);
                assert!(
                    (e.pressure(r) - byquad).abs() < 1e-6 * (1.0 + byquad.abs()),
                    "{:?} at r = {r}: {} vs {}",
                    e.kind(),
                    e.pressure(r),
                    byquad
                );
            }
        }
    }

    #[test]
    fn h_matches_quadrature_of_pprime_mprime() {
        let cases: Vec<EnergySpec> = vec![
            EnergySpec::new(
                EnergyKind::PowerPressure { gamma: 1.5, coeff: 1.0 },
                power_mob(0.6),
                2,
            )
            .unwrap(),
            EnergySpec::new(
                EnergyKind::PressureLinear { r0: 0.5 },
                MobilitySpec::new(MobilityKind::Logistic { threshold: 1.0 }).unwrap(),
                2,
            )
            .unwrap(),
            EnergySpec::new(
                EnergyKind::PowerPressure { gamma: 1.2, coeff: 1.0 },
                MobilitySpec::tabulated_from_fn(|r| r / (1.0 + r), 20.0, 1500).unwrap(),
                2,
            )
            .unwrap(),
        ];
        for e in &cases {
            let hi = 0.9 * e.threshold().min(3.0);
            for i in 1..=5 {
                let r = hi * i as f64 / 5.0;
                let byquad = e.h0()
                    + quad::integrate_sqrt_left(
                        &|z| e.pressure_prime(z) * e.mobility().m_prime(z),
                        r,
                        1e-12,
                    );
                assert!(
                    (e.h(r) - byquad).abs() < 2e-5 * (1.0 + byquad.abs()),
                    "{:?} at {r}: {} vs {}",
                    e.kind(),
                    e.h(r),
                    byquad
                );
            }
        }
    }

    #[test]
    fn case_b_compatibility_holds_for_logistic_um() {
        // m(0) = m(M) = 0 and P = r - r0 force int_0^M P'm' = 0 and H0 = 0.
        let e = EnergySpec::new(
            EnergyKind::PressureLinear { r0: 0.5 },
            MobilitySpec::new(MobilityKind::Logistic { threshold: 1.0 }).unwrap(),
            2,
        )
        .unwrap();
        assert_eq!(e.h0(), 0.0);
        // H(r) = m(r) here.
        for &r in &[0.1, 0.4, 0.9] {
            assert!((e.h(r) - e.mobility().m(r)).abs() < 1e-9);
        }
        // U matches the two-phase entropy up to an affine function: check U''.
        for &r in &[0.2, 0.5, 0.8] {
            let expect = 1.0 / (r * (1.0 - r));
            assert!((e.u_second(r) - expect).abs() < 1e-12);
            let eps = 1e-6;
            let fd = (e.u(r + eps) - 2.0 * e.u(r) + e.u(r - eps)) / (eps * eps);
            assert!((fd - expect).abs() < 1e-3 * expect, "U curvature at {r}");
        }
    }

    #[test]
    fn g_derivative_matches_p_second_times_m() {
        let e = EnergySpec::new(
            EnergyKind::PowerPressure { gamma: 2.0, coeff: 1.0 },
            power_mob(0.5),
            2,
        )
        .unwrap();
        for &r in &[0.3, 0.8, 1.7] {
            let eps = 1e-6;
            let gd = (e.g(r + eps) - e.g(r - eps)) / (2.0 * eps);
            let expect = e.pressure_second(r) * e.mobility().m(r);
            assert!((gd - expect).abs() < 1e-5 * (1.0 + expect.abs()), "at {r}");
        }
    }

    #[test]
    fn divergent_h_is_reported() {
        // U = r log r, m = r^0.3: P'm' ~ r^{-1.4}, not integrable at 0.
        let e = EnergySpec::new(EnergyKind::LogEntropy, power_mob(0.3), 2).unwrap();
        assert!(!e.h_is_finite());
        assert!(e.h(0.5).is_infinite());
    }

    #[test]
    fn invalid_pairs_are_rejected() {
        assert!(matches!(
            EnergySpec::new(
                EnergyKind::LogEntropy,
                MobilitySpec::new(MobilityKind::Constant { value: 1.0 }).unwrap(),
                2
            ),
            Err(Error::QuadratureDivergent { .. })
        ));
        assert!(EnergySpec::new(
            EnergyKind::PowerEntropy { beta: 0.4, coeff: 1.0 },
            power_mob(0.3),
            2
        )
        .is_err());
    }

    #[test]
    fn eq8_pairing_yields_heat_pressure() {
        // U = r^{2-a} / ((2-a)(1-a)) with m = r^a gives P(r) = r exactly.
        let alpha: f64 = 0.6;
        let beta = 2.0 - alpha;
        let coeff = 1.0 / ((2.0 - alpha) * (1.0 - alpha));
        let e = EnergySpec::new(
            EnergyKind::PowerEntropy { beta, coeff },
            power_mob(alpha),
            1,
        )
        .unwrap();
        for &r in &[0.2, 1.0, 2.5] {
            assert!((e.pressure(r) - r).abs() < 1e-12);
        }
    }

    #[test]
    fn pressure_linear_anchors_u_at_r0() {
        for e in [
            EnergySpec::new(EnergyKind::PressureLinear { r0: 1.0 }, power_mob(1.0), 2).unwrap(),
            EnergySpec::new(EnergyKind::PressureLinear { r0: 0.0 }, power_mob(0.5), 2).unwrap(),
        ] {
            if let EnergyKind::PressureLinear { r0 } = e.kind() {
                if *r0 > 0.0 {
                    assert!(e.u(*r0).abs() < 1e-12);
                    assert!(e.u_prime(*r0).abs() < 1e-12);
                }
                // Convexity: U'' = 1/m > 0.
                assert!(e.u_second(0.7) > 0.0);
            }
        }
    }
}
