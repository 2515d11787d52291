//! Numerical toolkit for transport distances with nonlinear mobility.
//!
//! The crate computes the dynamical transport distance generated by a concave
//! mobility m on a box domain, together with its minimizing geodesics, the
//! associated nonlinear diffusion flow dρ/dt = ΔP(ρ) with zero-flux boundary
//! conditions, and a set of numerical experiments probing displacement
//! convexity: the generalized McCann condition, second-derivative formulas of
//! internal/potential/interaction energies, a scaling counterexample, and
//! evolution variational inequalities.
//!
//! Modules follow the pipeline:
//! - [`mobility`]: function algebra for m, U, P, H and the analytic checkers;
//! - [`grid`]: staggered space-time discretization and the discrete action;
//! - [`geodesic`]: the primal-dual distance solver;
//! - [`diffusion`]: the implicit flow solver and weighted Neumann problems;
//! - [`analysis`]: the convexity experiments.

pub mod analysis;
pub mod diffusion;
pub mod error;
pub mod geodesic;
pub mod grid;
pub mod mobility;
pub mod num;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    //! Keeps the guide's code blocks compiling: every chapter is attached as
    //! a doc comment, so `cargo test --doc` runs the book snippets.
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/mobility.md")]
    mod mobility {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/geodesics.md")]
    mod geodesics {}
    #[doc = include_str!("../../../book/src/diffusion.md")]
    mod diffusion {}
    #[doc = include_str!("../../../book/src/convexity.md")]
    mod convexity {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
