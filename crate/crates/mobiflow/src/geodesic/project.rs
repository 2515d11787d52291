//! Euclidean projection onto the affine set
//!   { discrete continuity, zero-flux faces, rho(0) = rho0, rho(1) = rho1 }.
//!
//! The KKT system for the multiplier is a space-time problem
//!   (T/ds^2 + L) lambda = defect,
//! where T is the zero-flux second-difference stencil across time slabs and
//! L the spatial Neumann Laplacian; both diagonalize in tensorized DCT-II
//! bases, so the projection costs a handful of small dense matrix products.

use ndarray::{Array2, Array3, Axis};

use crate::error::{Error, Result};
use crate::grid::{Density, Domain, StaggeredField};
use crate::num::dct::Dct;

#[derive(Debug, Clone)]
pub struct ContinuityProjector {
    pub domain: Domain,
    pub n_s: usize,
    dct_t: Dct,
    dct_x: Dct,
    dct_y: Dct,
    /// (T/ds^2 + L) eigenvalues; the (0,0,0) entry is zero (mass mode).
    eig: Array3<f64>,
}

impl ContinuityProjector {
    pub fn new(domain: Domain, n_s: usize) -> Self {
        let dct_t = Dct::new(n_s);
        let dct_x = Dct::new(domain.nx);
        let dct_y = Dct::new(domain.ny);
        let ds = 1.0 / n_s as f64;
        let mut eig = Array3::zeros((n_s, domain.nx, domain.ny));
        for k in 0..n_s {
            for i in 0..domain.nx {
                for j in 0..domain.ny {
                    eig[[k, i, j]] = dct_t.laplacian_eigenvalue(k, ds)
                        + dct_x.laplacian_eigenvalue(i, domain.dx())
                        + dct_y.laplacian_eigenvalue(j, domain.dy());
                }
            }
        }
        ContinuityProjector {
            domain,
            n_s,
            dct_t,
            dct_x,
            dct_y,
            eig,
        }
    }

    /// Continuity defect of (rho, w) with the endpoints replaced by the data.
    fn defect(&self, field: &StaggeredField, rho0: &Density, rho1: &Density) -> Array3<f64> {
        let (nx, ny) = (self.domain.nx, self.domain.ny);
        let (dx, dy) = (self.domain.dx(), self.domain.dy());
        let ds = 1.0 / self.n_s as f64;
        let node = |k: usize, i: usize, j: usize| -> f64 {
            if k == 0 {
                rho0.values[[i, j]]
            } else if k == self.n_s {
                rho1.values[[i, j]]
            } else {
                field.rho[[k, i, j]]
            }
        };
        let mut out = Array3::zeros((self.n_s, nx, ny));
        for k in 0..self.n_s {
            for i in 0..nx {
                for j in 0..ny {
                    let dt_rho = (node(k + 1, i, j) - node(k, i, j)) / ds;
                    let div = (field.wx[[k, i + 1, j]] - field.wx[[k, i, j]]) / dx
                        + (field.wy[[k, i, j + 1]] - field.wy[[k, i, j]]) / dy;
                    out[[k, i, j]] = dt_rho + div;
                }
            }
        }
        out
    }

    /// Weighted L2 norm used for the stopping test: sqrt(sum d^2 vol ds).
    pub fn defect_norm(&self, defect: &Array3<f64>) -> f64 {
        let w = self.domain.cell_volume() / self.n_s as f64;
        (defect.iter().map(|v| v * v).sum::<f64>() * w).sqrt()
    }

    fn solve_multiplier(&self, mut rhs: Array3<f64>) -> Array3<f64> {
        let (n_s, nx, ny) = rhs.dim();
        // DCT along time: reshape (n_s, nx*ny).
        let flat = rhs.view().into_shape_with_order((n_s, nx * ny)).unwrap().to_owned();
        let ft = self.dct_t.forward_rows(flat.view());
        let mut modes = Array3::from_shape_vec((n_s, nx, ny), ft.into_raw_vec_and_offset().0).unwrap();
        // DCT along x for each time mode: (nx, ny) slabs.
        for k in 0..n_s {
            let slab = modes.index_axis(Axis(0), k).to_owned();
            let fx = self.dct_x.forward_rows(slab.view());
            let fy = self.dct_y.forward_rows(fx.t());
            modes.index_axis_mut(Axis(0), k).assign(&fy.t());
        }
        // Divide by eigenvalues, pin the mass mode.
        for k in 0..n_s {
            for i in 0..nx {
                for j in 0..ny {
                    let lam = self.eig[[k, i, j]];
                    if lam > 0.0 {
                        modes[[k, i, j]] /= lam;
                    } else {
                        modes[[k, i, j]] = 0.0;
                    }
                }
            }
        }
        // Inverse transforms.
        for k in 0..n_s {
            let slab = modes.index_axis(Axis(0), k).to_owned();
            let fy = self.dct_y.inverse_rows(slab.t());
            let fx = self.dct_x.inverse_rows(fy.t());
            modes.index_axis_mut(Axis(0), k).assign(&fx);
        }
        let flat = modes.view().into_shape_with_order((n_s, nx * ny)).unwrap().to_owned();
        let back = self.dct_t.inverse_rows(flat.view());
        rhs.assign(
            &Array3::from_shape_vec((n_s, nx, ny), back.into_raw_vec_and_offset().0).unwrap(),
        );
        rhs
    }

    /// Project the field in place. Returns the L2 defect norm of the input
    /// (the pre-projection continuity residual).
    pub fn project(&self, field: &mut StaggeredField, rho0: &Density, rho1: &Density) -> f64 {
        let (nx, ny) = (self.domain.nx, self.domain.ny);
        let (dx, dy) = (self.domain.dx(), self.domain.dy());
        let ds = 1.0 / self.n_s as f64;
        let defect = self.defect(field, rho0, rho1);
        let norm = self.defect_norm(&defect);
        let lambda = self.solve_multiplier(defect);
        // w <- w - D^T lambda per slab.
        for k in 0..self.n_s {
            for i in 1..nx {
                for j in 0..ny {
                    field.wx[[k, i, j]] -= (lambda[[k, i - 1, j]] - lambda[[k, i, j]]) / dx;
                }
            }
            for i in 0..nx {
                for j in 1..ny {
                    field.wy[[k, i, j]] -= (lambda[[k, i, j - 1]] - lambda[[k, i, j]]) / dy;
                }
            }
        }
        // Interior density update, endpoints copied exactly.
        for k in 1..self.n_s {
            for i in 0..nx {
                for j in 0..ny {
                    field.rho[[k, i, j]] += (lambda[[k, i, j]] - lambda[[k - 1, i, j]]) / ds;
                }
            }
        }
        for i in 0..nx {
            for j in 0..ny {
                field.rho[[0, i, j]] = rho0.values[[i, j]];
                field.rho[[self.n_s, i, j]] = rho1.values[[i, j]];
            }
        }
        norm
    }

    /// Mass-compatibility check used by the solver entry point.
    pub fn check_masses(rho0: &Density, rho1: &Density) -> Result<()> {
        let (m0, m1) = (rho0.mass(), rho1.mass());
        let rel = (m0 - m1).abs() / m0.abs().max(m1.abs()).max(1e-300);
        if rel > 1e-10 {
            return Err(Error::MassMismatch {
                lhs: m0,
                rhs: m1,
                rel,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{interpolate_linear, synthetic};

    fn setup_1d() -> (Domain, Density, Density) {
        let domain = Domain::line(16, 1.0).unwrap();
        let rho0 = synthetic::cosine_mixture(domain, 3, 1.0);
        let rho1 = synthetic::cosine_mixture(domain, 4, 1.0);
        (domain, rho0, rho1)
    }

    #[test]
    fn feasible_input_is_a_fixed_point() {
        let (domain, rho0, rho1) = setup_1d();
        let field = interpolate_linear(&rho0, &rho1, 6).unwrap();
        let projector = ContinuityProjector::new(domain, 6);
        let mut projected = field.clone();
        let res = projector.project(&mut projected, &rho0, &rho1);
        assert!(res < 1e-11, "feasible start should have no defect: {res}");
        for (a, b) in projected.rho.iter().zip(field.rho.iter()) {
            assert!((a - b).abs() < 1e-11);
        }
        for (a, b) in projected.wx.iter().zip(field.wx.iter()) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn projection_restores_feasibility_and_is_idempotent() {
        let (domain, rho0, rho1) = setup_1d();
        let mut field = interpolate_linear(&rho0, &rho1, 6).unwrap();
        // Perturb everything.
        for (idx, v) in field.rho.indexed_iter_mut() {
            *v += 0.01 * ((idx.0 * 7 + idx.1 * 3) as f64).sin();
        }
        for (idx, v) in field.wx.indexed_iter_mut() {
            if idx.1 > 0 && idx.1 < domain.nx {
                *v += 0.02 * ((idx.0 * 5 + idx.1) as f64).cos();
            }
        }
        let projector = ContinuityProjector::new(domain, 6);
        let res1 = projector.project(&mut field, &rho0, &rho1);
        assert!(res1 > 1e-4, "perturbation should be visible");
        assert!(field.continuity_residual() < 1e-10);
        // endpoints exact
        for i in 0..domain.nx {
            assert_eq!(field.rho[[0, i, 0]], rho0.values[[i, 0]]);
            assert_eq!(field.rho[[6, i, 0]], rho1.values[[i, 0]]);
        }
        let before = field.clone();
        let res2 = projector.project(&mut field, &rho0, &rho1);
        assert!(res2 < 1e-10, "second projection defect {res2}");
        for (a, b) in field.rho.iter().zip(before.rho.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn divergence_free_momentum_perturbation_leaves_density_unchanged() {
        // 2d: perturb w by a discrete curl field (exactly divergence free,
        // zero flux); the projection must not touch rho.
        let domain = Domain::rect(8, 8, 1.0, 1.0).unwrap();
        let rho0 = synthetic::cosine_mixture(domain, 11, 1.0);
        let rho1 = synthetic::cosine_mixture(domain, 12, 1.0);
        let n_s = 4;
        let base = interpolate_linear(&rho0, &rho1, n_s).unwrap();
        let mut field = base.clone();
        // Stream function on interior corners.
        let psi = Array2::from_shape_fn((domain.nx + 1, domain.ny + 1), |(i, j)| {
            if i == 0 || j == 0 || i == domain.nx || j == domain.ny {
                0.0
            } else {
                ((i * 3 + j * 5) as f64).sin()
            }
        });
        for k in 0..n_s {
            for i in 1..domain.nx {
                for j in 0..domain.ny {
                    field.wx[[k, i, j]] += (psi[[i, j + 1]] - psi[[i, j]]) / domain.dy();
                }
            }
            for i in 0..domain.nx {
                for j in 1..domain.ny {
                    field.wy[[k, i, j]] -= (psi[[i + 1, j]] - psi[[i, j]]) / domain.dx();
                }
            }
        }
        assert!(field.continuity_residual() < 1e-11, "curl field must be divergence free");
        let projector = ContinuityProjector::new(domain, n_s);
        let mut projected = field.clone();
        projector.project(&mut projected, &rho0, &rho1);
        for (a, b) in projected.rho.iter().zip(field.rho.iter()) {
            assert!((a - b).abs() < 1e-11);
        }
    }
}
