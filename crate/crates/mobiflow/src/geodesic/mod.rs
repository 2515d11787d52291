//! The mobility transport distance and its minimizing geodesics, computed by
//! proximal splitting on the staggered space-time grid.

mod bounds;
mod project;
mod prox;
mod quantile;
mod solver;

pub use bounds::upper_bound_pushforward_1d;
pub use project::ContinuityProjector;
pub use prox::pointwise_prox;
pub use quantile::wasserstein_1d;
pub use solver::{solve_geodesic, GeodesicResult, SolverConfig};
