//! Numerical verification experiments: second-derivative formulas, the
//! scaling counterexample, displacement-convexity scans, EVI checks, and the
//! action-derivative identity.

mod action_derivative;
mod convexity;
mod counterexample;
mod evi;
mod hessians;
pub mod stencil;

pub use action_derivative::{
    action_derivative_check, ActionDerivativeConfig, ActionDerivativeReport, ActionDerivativeRow,
};
pub use convexity::{convexity_scan, ConvexityScan};
pub use counterexample::{
    build_counterexample, counterexample_scaling, default_counterexample_potential,
    CounterexampleProfile, Polynomial, ScalingReport,
};
pub use evi::{evi_check, EviCheckpoint, EviReport};
pub use hessians::{
    interaction_hessian, internal_hessian, potential_hessian, DifferenceKernel, Functional,
    SecondDerivativeReport,
};
