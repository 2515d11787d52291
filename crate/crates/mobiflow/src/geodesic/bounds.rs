//! Displacement-interpolation upper bound on the mobility distance.
//!
//! Pushing a density bounded by b along Wasserstein geodesics costs at most
//! b^{1/d} K_{m,d}(b) W2, where K is the tail constant; the bound is an
//! a-priori certificate the solver result can be checked against.

use crate::error::{Error, Result};
use crate::geodesic::quantile::wasserstein_1d;
use crate::grid::Density;
use crate::mobility::{finiteness_constant, MobilitySpec};

/// Evaluate b^{1/d} K_{m,d}(b) W2(rho0, rho1) with b = max rho0.
///
/// 1d densities, case-A mobility; `d_eff` selects the dimension entering the
/// tail constant (1 for the native bound on interval domains).
pub fn upper_bound_pushforward_1d(
    rho0: &Density,
    rho1: &Density,
    mobility: &MobilitySpec,
    d_eff: usize,
) -> Result<f64> {
    if rho0.domain.dim != 1 {
        return Err(Error::InvalidSpec("pushforward bound is 1d".into()));
    }
    if !mobility.is_case_a() {
        return Err(Error::CaseBUnsupported {
            threshold: mobility.threshold(),
        });
    }
    let b = rho0.max();
    if !(b > 0.0) {
        return Ok(0.0);
    }
    let k = finiteness_constant(mobility, d_eff, b);
    if !k.is_finite() {
        return Err(Error::InfiniteConstant);
    }
    let w2 = wasserstein_1d(rho0, rho1)?;
    Ok(b.powf(1.0 / d_eff as f64) * k * w2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{synthetic, Domain};
    use crate::mobility::MobilityKind;

    #[test]
    fn identical_endpoints_bound_is_zero() {
        let domain = Domain::line(32, 1.0).unwrap();
        let rho = synthetic::cosine_mixture(domain, 2, 1.0);
        let m = MobilitySpec::new(MobilityKind::PowerLaw { alpha: 1.0 }).unwrap();
        let b = upper_bound_pushforward_1d(&rho, &rho, &m, 1).unwrap();
        assert!(b < 1e-12);
    }

    #[test]
    fn finite_and_divergent_tails() {
        let domain = Domain::line(32, 1.0).unwrap();
        let rho0 = synthetic::cosine_mixture(domain, 2, 1.0);
        let rho1 = synthetic::cosine_mixture(domain, 3, 1.0);
        // alpha = 0.3 > 1 - 1/2: K finite for d_eff = 2, bound finite.
        let m = MobilitySpec::new(MobilityKind::PowerLaw { alpha: 0.3 }).unwrap();
        assert!(matches!(
            upper_bound_pushforward_1d(&rho0, &rho1, &m, 2),
            Err(Error::InfiniteConstant)
        ) == false);
        let bound = upper_bound_pushforward_1d(&rho0, &rho1, &m, 2).unwrap();
        assert!(bound.is_finite() && bound > 0.0);
        // alpha = 0.3 <= 1 - 1/3 for d_eff = 3: divergent tail.
        assert!(matches!(
            upper_bound_pushforward_1d(&rho0, &rho1, &m, 3),
            Err(Error::InfiniteConstant)
        ));
    }
}
