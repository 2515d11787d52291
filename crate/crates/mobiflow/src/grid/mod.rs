//! Staggered space-time discretization on box domains: densities, momenta,
//! the discrete continuity equation, and the discrete action functional.

mod domain;
mod field;
pub mod io;
mod poisson;
pub mod synthetic;

pub use domain::{Density, Domain};
pub use field::{
    convolve_smooth, discrete_action, interpolate_linear, ActionProfile, StaggeredField,
};
pub(crate) use field::{convolve_face_array, discrete_action_clamped};
pub use poisson::{
    divergence, divergence_adjoint, minimal_norm_momentum, solve_neumann_density, NeumannPoisson,
};
