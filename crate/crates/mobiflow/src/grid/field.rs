//! Staggered space-time fields and the discrete action.
//!
//! Density lives on cell centers at time nodes s_k = k/n_s; momentum lives on
//! cell faces at time midpoints. With that staggering the continuity equation
//! is an exact linear constraint
//!
//!   (rho^{k+1} - rho^k)/ds + div_h w^{k+1/2} = 0,
//!
//! zero-flux faces are stored explicitly as zeros, and total mass telescopes
//! to a constant across time nodes.

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::grid::domain::{Density, Domain};
use crate::grid::poisson::{minimal_norm_momentum, NeumannPoisson};
use crate::mobility::MobilitySpec;

/// Space-time staggered (density, momentum) pair.
#[derive(Debug, Clone)]
pub struct StaggeredField {
    pub domain: Domain,
    pub n_s: usize,
    /// (n_s + 1, nx, ny): density at time nodes.
    pub rho: Array3<f64>,
    /// (n_s, nx + 1, ny): x-momentum at time midpoints; boundary slices zero.
    pub wx: Array3<f64>,
    /// (n_s, nx, ny + 1): y-momentum; identically zero in 1d.
    pub wy: Array3<f64>,
}

/// Per-slab action values A_k and the time-integrated total ds * sum A_k.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ActionProfile {
    pub per_slab: Vec<f64>,
    pub total: f64,
}

impl StaggeredField {
    pub fn zeros(domain: Domain, n_s: usize) -> Self {
        StaggeredField {
            domain,
            n_s,
            rho: Array3::zeros((n_s + 1, domain.nx, domain.ny)),
            wx: Array3::zeros((n_s, domain.nx + 1, domain.ny)),
            wy: Array3::zeros((n_s, domain.nx, domain.ny + 1)),
        }
    }

    pub fn ds(&self) -> f64 {
        1.0 / self.n_s as f64
    }

    pub fn density_at(&self, k: usize) -> Density {
        Density {
            domain: self.domain,
            values: self.rho.index_axis(ndarray::Axis(0), k).to_owned(),
        }
    }

    /// Mass at each time node (constant for a feasible field).
    pub fn masses(&self) -> Vec<f64> {
        let vol = self.domain.cell_volume();
        (0..=self.n_s)
            .map(|k| self.rho.index_axis(ndarray::Axis(0), k).sum() * vol)
            .collect()
    }

    /// Continuity defect per (slab, cell); zero for feasible fields.
    pub fn continuity_defect(&self) -> Array3<f64> {
        let (nx, ny) = (self.domain.nx, self.domain.ny);
        let (dx, dy) = (self.domain.dx(), self.domain.dy());
        let ds = self.ds();
        let mut out = Array3::zeros((self.n_s, nx, ny));
        for k in 0..self.n_s {
            for i in 0..nx {
                for j in 0..ny {
                    let dt_rho = (self.rho[[k + 1, i, j]] - self.rho[[k, i, j]]) / ds;
                    let div = (self.wx[[k, i + 1, j]] - self.wx[[k, i, j]]) / dx
                        + (self.wy[[k, i, j + 1]] - self.wy[[k, i, j]]) / dy;
                    out[[k, i, j]] = dt_rho + div;
                }
            }
        }
        out
    }

    /// L2(dx ds) norm of the continuity defect.
    pub fn continuity_residual(&self) -> f64 {
        let w = self.domain.cell_volume() * self.ds();
        (self.continuity_defect().iter().map(|v| v * v).sum::<f64>() * w).sqrt()
    }
}

/// Evaluate the discrete action: for every interior face the density is the
/// arithmetic mean of the four neighboring (cell, time-node) values, and the
/// slab action is sum phi_m(rho_face, w_face) * facevol. Densities outside
/// [0, M] make the action +inf.
pub fn discrete_action(field: &StaggeredField, mobility: &MobilitySpec) -> ActionProfile {
    action_impl(field, mobility, false)
}

/// Same sum with face densities clamped into [0, M]; used to report the
/// action of solver iterates whose interpolated densities can sit a hair
/// outside the box.
pub(crate) fn discrete_action_clamped(
    field: &StaggeredField,
    mobility: &MobilitySpec,
) -> ActionProfile {
    action_impl(field, mobility, true)
}

fn action_impl(field: &StaggeredField, mobility: &MobilitySpec, clamp: bool) -> ActionProfile {
    let m_cap = mobility.threshold();
    if !clamp {
        for v in field.rho.iter() {
            if *v < 0.0 || *v > m_cap {
                let per_slab = vec![f64::INFINITY; field.n_s];
                return ActionProfile {
                    per_slab,
                    total: f64::INFINITY,
                };
            }
        }
    }
    let (nx, ny) = (field.domain.nx, field.domain.ny);
    let facevol = field.domain.cell_volume();
    let phi = |rho_bar: f64, w: f64| -> f64 {
        let r = if clamp {
            rho_bar.max(0.0).min(m_cap)
        } else {
            rho_bar
        };
        crate::mobility::action_density(mobility, r, &[w])
    };
    let mut per_slab = Vec::with_capacity(field.n_s);
    for k in 0..field.n_s {
        let mut acc = 0.0;
        for i in 1..nx {
            for j in 0..ny {
                let w = field.wx[[k, i, j]];
                let rho_bar = 0.25
                    * (field.rho[[k, i - 1, j]]
                        + field.rho[[k, i, j]]
                        + field.rho[[k + 1, i - 1, j]]
                        + field.rho[[k + 1, i, j]]);
                acc += phi(rho_bar, w) * facevol;
            }
        }
        for i in 0..nx {
            for j in 1..ny {
                let w = field.wy[[k, i, j]];
                let rho_bar = 0.25
                    * (field.rho[[k, i, j - 1]]
                        + field.rho[[k, i, j]]
                        + field.rho[[k + 1, i, j - 1]]
                        + field.rho[[k + 1, i, j]]);
                acc += phi(rho_bar, w) * facevol;
            }
        }
        per_slab.push(acc);
    }
    let ds = field.ds();
    let total = per_slab.iter().map(|a| a * ds).sum();
    ActionProfile { per_slab, total }
}

/// Linear interpolation in time with per-slab minimal-norm momentum; the
/// result satisfies the discrete continuity equation exactly.
pub fn interpolate_linear(rho0: &Density, rho1: &Density, n_s: usize) -> Result<StaggeredField> {
    if rho0.domain != rho1.domain {
        return Err(Error::InvalidSpec("endpoint domains differ".into()));
    }
    if n_s == 0 {
        return Err(Error::InvalidSpec("need at least one time slab".into()));
    }
    let (m0, m1) = (rho0.mass(), rho1.mass());
    let rel = (m0 - m1).abs() / m0.abs().max(m1.abs()).max(1e-300);
    if rel > 1e-12 {
        return Err(Error::MassMismatch {
            lhs: m0,
            rhs: m1,
            rel,
        });
    }
    let domain = rho0.domain;
    let mut field = StaggeredField::zeros(domain, n_s);
    for k in 0..=n_s {
        let s = k as f64 / n_s as f64;
        for i in 0..domain.nx {
            for j in 0..domain.ny {
                field.rho[[k, i, j]] =
                    (1.0 - s) * rho0.values[[i, j]] + s * rho1.values[[i, j]];
            }
        }
    }
    // div w = -(rho1 - rho0) on every slab; solve once, reuse per slab.
    let poisson = NeumannPoisson::new(domain);
    let mut g = &rho0.values - &rho1.values;
    let mean = g.sum() / g.len() as f64;
    g.mapv_inplace(|v| v - mean);
    let (wx, wy) = minimal_norm_momentum(&poisson, &g);
    for k in 0..n_s {
        field.wx.index_axis_mut(ndarray::Axis(0), k).assign(&wx);
        field.wy.index_axis_mut(ndarray::Axis(0), k).assign(&wy);
    }
    Ok(field)
}

/// Mass-preserving mollification with a compactly supported bump kernel of
/// radius eps, applied separably per axis; boundary overhang is folded back
/// by even reflection so column sums stay one.
pub fn convolve_smooth(rho: &Density, eps: f64) -> Density {
    assert!(eps >= 0.0);
    let domain = rho.domain;
    let mut values = rho.values.clone();
    if eps > 0.0 {
        values = convolve_axis(&values, kernel_weights(eps, domain.dx()), true);
        if domain.ny > 1 {
            values = convolve_axis(&values, kernel_weights(eps, domain.dy()), false);
        }
    }
    Density { domain, values }
}

/// Mollify a face array along the cell axes with the same folded kernel.
pub(crate) fn convolve_face_array(values: &Array2<f64>, eps: f64, dx: f64, dy: f64) -> Array2<f64> {
    let mut out = values.clone();
    if eps > 0.0 {
        out = convolve_axis(&out, kernel_weights(eps, dx), true);
        if values.dim().1 > 1 {
            out = convolve_axis(&out, kernel_weights(eps, dy), false);
        }
    }
    out
}

fn kernel_weights(eps: f64, h: f64) -> Vec<f64> {
    // Bump exp(-1/(1 - u^2)) sampled at cell offsets, normalized.
    let radius = (eps / h).floor() as i64;
    if radius == 0 {
        return vec![1.0];
    }
    let mut w = Vec::with_capacity((2 * radius + 1) as usize);
    for o in -radius..=radius {
        let u = (o as f64) * h / eps;
        let v = if u.abs() < 1.0 {
            (-1.0 / (1.0 - u * u)).exp()
        } else {
            0.0
        };
        w.push(v);
    }
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    w
}

fn convolve_axis(values: &Array2<f64>, weights: Vec<f64>, along_x: bool) -> Array2<f64> {
    let (nx, ny) = values.dim();
    let radius = (weights.len() / 2) as i64;
    let reflect = |idx: i64, n: i64| -> usize {
        let mut i = idx;
        // Even reflection about the walls at -1/2 and n-1/2.
        loop {
            if i < 0 {
                i = -i - 1;
            } else if i >= n {
                i = 2 * n - 1 - i;
            } else {
                return i as usize;
            }
        }
    };
    let mut out = Array2::zeros((nx, ny));
    for i in 0..nx {
        for j in 0..ny {
            let mut acc = 0.0;
            for (oi, w) in weights.iter().enumerate() {
                let o = oi as i64 - radius;
                let v = if along_x {
                    values[[reflect(i as i64 + o, nx as i64), j]]
                } else {
                    values[[i, reflect(j as i64 + o, ny as i64)]]
                };
                acc += w * v;
            }
            out[[i, j]] = acc;
        }
    }
    out
}
