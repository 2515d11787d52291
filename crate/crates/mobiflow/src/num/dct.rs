//! Orthonormal DCT-II transforms, used to diagonalize discrete Neumann
//! Laplacians on uniform grids.
//!
//! The tridiagonal (-1, 2, -1) matrix with its first and last diagonal
//! entries replaced by 1 (zero-flux stencil) has eigenvectors
//! v_j(i) = cos(pi j (i + 1/2) / n) and eigenvalues 2 - 2 cos(pi j / n).
//! Transforms are applied as small dense matrix products, which is exact
//! and fast at the grid sizes this crate targets.

use ndarray::{Array2, ArrayView2};

/// Precomputed orthonormal DCT-II basis for size `n`.
#[derive(Debug, Clone)]
pub struct Dct {
    n: usize,
    /// Rows are the orthonormal eigenvectors (forward transform matrix).
    forward: Array2<f64>,
    /// Eigenvalues 2 - 2 cos(pi j / n) of the unscaled Neumann stencil.
    eigenvalues: Vec<f64>,
}

impl Dct {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut forward = Array2::zeros((n, n));
        for j in 0..n {
            let scale = if j == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            for i in 0..n {
                let angle = std::f64::consts::PI * j as f64 * (i as f64 + 0.5) / n as f64;
                forward[[j, i]] = scale * angle.cos();
            }
        }
        let eigenvalues = (0..n)
            .map(|j| 2.0 - 2.0 * (std::f64::consts::PI * j as f64 / n as f64).cos())
            .collect();
        Dct {
            n,
            forward,
            eigenvalues,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// Laplacian eigenvalue for mode j on a grid of spacing h:
    /// (2 - 2 cos(pi j / n)) / h^2.
    pub fn laplacian_eigenvalue(&self, j: usize, h: f64) -> f64 {
        self.eigenvalues[j] / (h * h)
    }

    /// Forward transform along the rows of a (n, m) array: out = C * data.
    pub fn forward_rows(&self, data: ArrayView2<f64>) -> Array2<f64> {
        debug_assert_eq!(data.nrows(), self.n);
        self.forward.dot(&data)
    }

    /// Inverse transform along the rows: out = C^T * data (C is orthogonal).
    pub fn inverse_rows(&self, data: ArrayView2<f64>) -> Array2<f64> {
        debug_assert_eq!(data.nrows(), self.n);
        self.forward.t().dot(&data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    #[test]
    fn orthonormal() {
        let dct = Dct::new(17);
        let id = dct.forward.dot(&dct.forward.t());
        for i in 0..17 {
            for j in 0..17 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((id[[i, j]] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonalizes_neumann_stencil() {
        let n = 13;
        let dct = Dct::new(n);
        // Apply the zero-flux second-difference stencil to each eigenvector.
        for j in 0..n {
            let v: Array1<f64> = dct.forward.row(j).to_owned();
            let mut av = Array1::zeros(n);
            for i in 0..n {
                let left = if i > 0 { v[i - 1] } else { v[i] };
                let right = if i + 1 < n { v[i + 1] } else { v[i] };
                av[i] = 2.0 * v[i] - left - right;
            }
            for i in 0..n {
                assert!(
                    (av[i] - dct.eigenvalues[j] * v[i]).abs() < 1e-12,
                    "mode {j} entry {i}"
                );
            }
        }
    }
}
