//! Error type shared across the toolkit.

use thiserror::Error;

/// Errors raised by spec validation, solvers, and experiments.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mobility is not concave: chord test failed at r = {at} (defect {defect:.3e})")]
    NonConcaveMobility { at: f64, defect: f64 },

    #[error("mobility thresholds differ: {lhs} vs {rhs}")]
    IncompatibleThreshold { lhs: f64, rhs: f64 },

    #[error("operation requires a case-A mobility (threshold M = +inf), got M = {threshold}")]
    CaseBUnsupported { threshold: f64 },

    #[error("minimal pressure is defined for dimension d > 1")]
    DimensionOne,

    #[error("endpoint masses differ: {lhs} vs {rhs} (relative gap {rel:.3e})")]
    MassMismatch { lhs: f64, rhs: f64, rel: f64 },

    #[error("case-B endpoint exceeds the density threshold M = {threshold}: max = {max}")]
    ThresholdExceeded { threshold: f64, max: f64 },

    #[error("Newton iteration diverged at t = {t}: residual {residual:.3e}; retry with a smaller time step")]
    NewtonDiverged { t: f64, residual: f64 },

    #[error("right-hand side is not zero-mean: integral = {mean:.3e}")]
    NonZeroMeanRhs { mean: f64 },

    #[error("elliptic weight degenerates: min m(rho) = {min:.3e}")]
    DegenerateWeight { min: f64 },

    #[error("density touches the boundary of (0, M); the formula requires a strictly interior range")]
    DegenerateDensity,

    #[error("grid does not resolve epsilon = {eps}: need h <= eps/20, got h = {h}")]
    UnresolvedEpsilon { eps: f64, h: f64 },

    #[error("mobility is linear (m'' = 0 everywhere); the counterexample needs curvature")]
    MobilityLinear,

    #[error("finiteness constant K diverges for this mobility; the pushforward bound is vacuous")]
    InfiniteConstant,

    #[error("integral diverges while building {what}")]
    QuadratureDivergent { what: &'static str },

    #[error("case-B compatibility fails: int_0^M P'm' = {integral:.3e} but m(0) = m(M) = 0 forces 0")]
    CompatibilityViolated { integral: f64 },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
