//! Mobilities, energy densities, and the analytic checkers that need no PDE
//! machinery: the generalized McCann condition, its sufficient variant, the
//! minimal pressure, tail finiteness constants, and the action density.

mod energy;
mod gmc;
mod spec;

pub use energy::{EnergyKind, EnergySpec, PowerTerm};
pub use gmc::{
    action_density, check_gmc, check_gmc_sufficient, finiteness_constant, minimal_pressure,
    GmcVerdict, DEFAULT_GMC_SAMPLES,
};
pub use spec::{MobilityKind, MobilitySpec};
