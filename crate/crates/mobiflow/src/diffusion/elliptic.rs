//! Weighted elliptic Neumann problem
//!   -div(m(rho) grad zeta) = rhs,  grad zeta . n = 0,  int zeta = 0,
//! solved by conjugate gradients preconditioned with the constant-coefficient
//! zero-flux Laplacian (one DCT solve per application).

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::{Density, NeumannPoisson};
use crate::mobility::MobilitySpec;
use crate::num::pcg::pcg;

/// Zero-mean solution of the weighted Neumann problem with its residual.
#[derive(Debug, Clone)]
pub struct PotentialField {
    pub zeta: Density,
    pub residual: f64,
}

/// Face mobilities (arithmetic mean) for the variable-coefficient operator.
pub(crate) fn face_weights(rho: &Density, mobility: &MobilitySpec) -> (Array2<f64>, Array2<f64>) {
    let (nx, ny) = (rho.domain.nx, rho.domain.ny);
    let m: Array2<f64> = rho.values.mapv(|r| mobility.m(r.max(0.0)));
    let mut mx = Array2::zeros((nx + 1, ny));
    let mut my = Array2::zeros((nx, ny + 1));
    for i in 1..nx {
        for j in 0..ny {
            mx[[i, j]] = 0.5 * (m[[i - 1, j]] + m[[i, j]]);
        }
    }
    for i in 0..nx {
        for j in 1..ny {
            my[[i, j]] = 0.5 * (m[[i, j - 1]] + m[[i, j]]);
        }
    }
    (mx, my)
}

/// Apply -div(m grad .) with zero-flux faces.
pub(crate) fn apply_weighted_laplacian(
    rho_domain: &crate::grid::Domain,
    mx: &Array2<f64>,
    my: &Array2<f64>,
    zeta: &Array2<f64>,
) -> Array2<f64> {
    let (nx, ny) = (rho_domain.nx, rho_domain.ny);
    let (dx2, dy2) = (
        rho_domain.dx() * rho_domain.dx(),
        rho_domain.dy() * rho_domain.dy(),
    );
    let mut out = Array2::zeros((nx, ny));
    for i in 0..nx {
        for j in 0..ny {
            let mut acc = 0.0;
            if i > 0 {
                acc += mx[[i, j]] * (zeta[[i, j]] - zeta[[i - 1, j]]) / dx2;
            }
            if i + 1 < nx {
                acc += mx[[i + 1, j]] * (zeta[[i, j]] - zeta[[i + 1, j]]) / dx2;
            }
            if j > 0 {
                acc += my[[i, j]] * (zeta[[i, j]] - zeta[[i, j - 1]]) / dy2;
            }
            if j + 1 < ny {
                acc += my[[i, j + 1]] * (zeta[[i, j]] - zeta[[i, j + 1]]) / dy2;
            }
            out[[i, j]] = acc;
        }
    }
    out
}

/// Solve the weighted Neumann problem. The rhs must integrate to zero and the
/// weight must be uniformly elliptic (min m(rho) above 1e-12).
pub fn solve_weighted_neumann(
    rho: &Density,
    rhs: &Density,
    mobility: &MobilitySpec,
) -> Result<PotentialField> {
    assert_eq!(rho.domain, rhs.domain, "grids must match");
    let domain = rho.domain;
    let vol = domain.cell_volume();
    let n = domain.n_cells();
    let mean_integral = rhs.values.sum() * vol;
    let scale = rhs.values.iter().map(|v| v.abs()).sum::<f64>() * vol;
    if mean_integral.abs() > 1e-10 * scale.max(1.0) {
        return Err(Error::NonZeroMeanRhs {
            mean: mean_integral,
        });
    }
    let m_min = rho
        .values
        .iter()
        .map(|r| mobility.m(r.max(0.0)))
        .fold(f64::INFINITY, f64::min);
    if m_min < 1e-12 {
        return Err(Error::DegenerateWeight { min: m_min });
    }

    let (mx, my) = face_weights(rho, mobility);
    let m_mean = rho.values.iter().map(|r| mobility.m(r.max(0.0))).sum::<f64>() / n as f64;
    let poisson = NeumannPoisson::new(domain);

    // Zero-mean right-hand side in the pointwise (per-cell) sense.
    let mut b: Vec<f64> = rhs.values.iter().copied().collect();
    let b_mean = b.iter().sum::<f64>() / n as f64;
    b.iter_mut().for_each(|v| *v -= b_mean);
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut apply = |x: &[f64], y: &mut [f64]| {
        let xv = Array2::from_shape_vec((domain.nx, domain.ny), x.to_vec()).unwrap();
        let out = apply_weighted_laplacian(&domain, &mx, &my, &xv);
        for (yi, v) in y.iter_mut().zip(out.iter()) {
            *yi = *v;
        }
    };
    let mut precond = |x: &[f64], y: &mut [f64]| {
        let mut xv = Array2::from_shape_vec((domain.nx, domain.ny), x.to_vec()).unwrap();
        let mean = xv.sum() / n as f64;
        xv.mapv_inplace(|v| v - mean);
        let sol = poisson.solve(&xv);
        for (yi, v) in y.iter_mut().zip(sol.iter()) {
            *yi = v / m_mean;
        }
    };

    let mut x = vec![0.0; n];
    let rep = pcg(&mut apply, &mut precond, &b, &mut x, 1e-12 * (1.0 + bnorm), 4000);
    let mut zeta = Array2::from_shape_vec((domain.nx, domain.ny), x).unwrap();
    let mean = zeta.sum() / n as f64;
    zeta.mapv_inplace(|v| v - mean);

    let residual = rep.residual / bnorm.max(1e-300);
    Ok(PotentialField {
        zeta: Density::new(domain, zeta)?,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain;
    use crate::mobility::MobilityKind;

    fn const_mob() -> MobilitySpec {
        MobilitySpec::new(MobilityKind::Constant { value: 1.0 }).unwrap()
    }

    #[test]
    fn zero_rhs_gives_zero_potential() {
        let domain = Domain::line(16, 1.0).unwrap();
        let rho = Density::uniform(domain, 1.0);
        let rhs = Density::uniform(domain, 0.0);
        let out = solve_weighted_neumann(&rho, &rhs, &const_mob()).unwrap();
        assert!(out.zeta.values.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn unit_weight_cosine_rhs_matches_eigenfunction() {
        // -zeta'' = cos(pi x) on (0,1) with zero flux: zeta = cos(pi x)/pi^2,
        // discrete error O(h^2).
        let domain = Domain::line(128, 1.0).unwrap();
        let rho = Density::uniform(domain, 1.0);
        let rhs = Density::from_fn(domain, |x, _| (std::f64::consts::PI * x).cos());
        let out = solve_weighted_neumann(&rho, &rhs, &const_mob()).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        let h2 = domain.dx() * domain.dx();
        for i in 0..domain.nx {
            let (x, _) = domain.center(i, 0);
            let expect = (std::f64::consts::PI * x).cos() / pi2;
            assert!(
                (out.zeta.values[[i, 0]] - expect).abs() < 2.0 * h2,
                "at {x}: {} vs {expect}",
                out.zeta.values[[i, 0]]
            );
        }
    }

    #[test]
    fn weak_form_pairing_holds_for_random_weights() {
        // sum m grad zeta . grad eta = sum rhs eta for arbitrary eta.
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let domain = Domain::rect(12, 10, 1.0, 0.8).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let rho = Density::from_fn(domain, |_, _| rng.gen_range(0.5..2.0));
        let mut rng2 = rand_chacha::ChaCha8Rng::seed_from_u64(43);
        let mut rhs = Density::from_fn(domain, |_, _| rng2.gen_range(-1.0..1.0));
        let mean = rhs.values.sum() / rhs.values.len() as f64;
        rhs.values.mapv_inplace(|v| v - mean);
        let m = MobilitySpec::new(MobilityKind::PowerLaw { alpha: 0.5 }).unwrap();
        let out = solve_weighted_neumann(&rho, &rhs, &m).unwrap();
        assert!(out.residual < 1e-10, "residual {}", out.residual);

        let (mx, my) = face_weights(&rho, &m);
        let vol = domain.cell_volume();
        let mut rng3 = rand_chacha::ChaCha8Rng::seed_from_u64(44);
        for _ in 0..10 {
            let eta = Density::from_fn(domain, |_, _| rng3.gen_range(-1.0..1.0));
            // faces pairing
            let mut lhs = 0.0;
            for i in 1..domain.nx {
                for j in 0..domain.ny {
                    let gz = (out.zeta.values[[i, j]] - out.zeta.values[[i - 1, j]]) / domain.dx();
                    let ge = (eta.values[[i, j]] - eta.values[[i - 1, j]]) / domain.dx();
                    lhs += mx[[i, j]] * gz * ge * vol;
                }
            }
            for i in 0..domain.nx {
                for j in 1..domain.ny {
                    let gz = (out.zeta.values[[i, j]] - out.zeta.values[[i, j - 1]]) / domain.dy();
                    let ge = (eta.values[[i, j]] - eta.values[[i, j - 1]]) / domain.dy();
                    lhs += my[[i, j]] * gz * ge * vol;
                }
            }
            let rhs_pair: f64 = rhs
                .values
                .iter()
                .zip(eta.values.iter())
                .map(|(a, b)| a * b * vol)
                .sum();
            assert!(
                (lhs - rhs_pair).abs() < 1e-8 * (1.0 + rhs_pair.abs()),
                "{lhs} vs {rhs_pair}"
            );
        }
    }

    #[test]
    fn error_paths() {
        let domain = Domain::line(16, 1.0).unwrap();
        let rho = Density::uniform(domain, 1.0);
        let rhs = Density::uniform(domain, 0.5);
        assert!(matches!(
            solve_weighted_neumann(&rho, &rhs, &const_mob()),
            Err(Error::NonZeroMeanRhs { .. })
        ));
        let zero_rho = Density::uniform(domain, 0.0);
        let m = MobilitySpec::new(MobilityKind::PowerLaw { alpha: 1.0 }).unwrap();
        let rhs0 = Density::from_fn(domain, |x, _| (2.0 * std::f64::consts::PI * x).cos());
        assert!(matches!(
            solve_weighted_neumann(&zero_rho, &rhs0, &m),
            Err(Error::DegenerateWeight { .. })
        ));
    }
}
