//! Box domains and cell-centered density arrays.
//!
//! One- and two-dimensional problems share a single representation: a 1d
//! domain is a box with a single cell across the collapsed axis, so every
//! stencil is written once for the (nx, ny) layout.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A box [0, lx] x [0, ly] split into nx x ny uniform cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub dim: usize,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Domain {
    /// 1d interval [0, lx] with nx cells.
    pub fn line(nx: usize, lx: f64) -> Result<Self> {
        if nx < 4 {
            return Err(Error::InvalidSpec("need at least 4 cells per axis".into()));
        }
        if !(lx > 0.0) {
            return Err(Error::InvalidSpec("extent must be positive".into()));
        }
        Ok(Domain {
            dim: 1,
            nx,
            ny: 1,
            lx,
            ly: 1.0,
        })
    }

    /// 2d box [0, lx] x [0, ly] with nx x ny cells.
    pub fn rect(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidSpec("need at least 4 cells per axis".into()));
        }
        if !(lx > 0.0) || !(ly > 0.0) {
            return Err(Error::InvalidSpec("extents must be positive".into()));
        }
        Ok(Domain {
            dim: 2,
            nx,
            ny,
            lx,
            ly,
        })
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Center coordinate of cell (i, j).
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.dx(), (j as f64 + 0.5) * self.dy())
    }
}

/// A nonnegative scalar field on cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub domain: Domain,
    pub values: Array2<f64>,
}

impl Density {
    pub fn new(domain: Domain, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (domain.nx, domain.ny) {
            return Err(Error::InvalidSpec(format!(
                "density shape {:?} does not match domain ({}, {})",
                values.dim(),
                domain.nx,
                domain.ny
            )));
        }
        Ok(Density { domain, values })
    }

    pub fn uniform(domain: Domain, value: f64) -> Self {
        Density {
            domain,
            values: Array2::from_elem((domain.nx, domain.ny), value),
        }
    }

    /// Sample a closure at cell centers.
    pub fn from_fn(domain: Domain, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Array2::zeros((domain.nx, domain.ny));
        for i in 0..domain.nx {
            for j in 0..domain.ny {
                let (x, y) = domain.center(i, j);
                values[[i, j]] = f(x, y);
            }
        }
        Density { domain, values }
    }

    pub fn mass(&self) -> f64 {
        self.values.sum() * self.domain.cell_volume()
    }

    /// Rescale so the total mass equals `target`.
    pub fn normalized_to(mut self, target: f64) -> Self {
        let m = self.mass();
        assert!(m > 0.0, "cannot normalize a massless density");
        self.values.mapv_inplace(|v| v * target / m);
        self
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// L1 distance (integral of |self - other|).
    pub fn l1_distance(&self, other: &Density) -> f64 {
        assert_eq!(self.domain, other.domain);
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.domain.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.domain.cell_volume()).sqrt()
    }
}
