//! Nonlinear diffusion flows (the gradient-flow PDE of the internal energy)
//! and the weighted Neumann problems feeding the action derivatives.

mod elliptic;
mod flow;

pub use elliptic::{solve_weighted_neumann, PotentialField};
pub(crate) use elliptic::{apply_weighted_laplacian, face_weights};
pub use flow::{
    dissipation, energy_identity_residual, evolve, internal_energy, l1_contraction_check,
    step_diffusion, FlowState,
};
