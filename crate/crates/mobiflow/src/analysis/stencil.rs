//! Finite-difference stencils for the analysis experiments: central
//! differences inside, one-sided second-order at the walls, midpoint
//! quadrature on cells.

use ndarray::Array2;

use crate::grid::{Density, Domain};

/// First derivative along x: central inside, one-sided second order at walls.
pub fn grad_x(domain: &Domain, f: &Array2<f64>) -> Array2<f64> {
    let (nx, ny) = (domain.nx, domain.ny);
    let dx = domain.dx();
    let mut out = Array2::zeros((nx, ny));
    for j in 0..ny {
        for i in 0..nx {
            out[[i, j]] = if i == 0 {
                (-3.0 * f[[0, j]] + 4.0 * f[[1, j]] - f[[2, j]]) / (2.0 * dx)
            } else if i == nx - 1 {
                (3.0 * f[[nx - 1, j]] - 4.0 * f[[nx - 2, j]] + f[[nx - 3, j]]) / (2.0 * dx)
            } else {
                (f[[i + 1, j]] - f[[i - 1, j]]) / (2.0 * dx)
            };
        }
    }
    out
}

/// First derivative along y (zero for 1d grids).
pub fn grad_y(domain: &Domain, f: &Array2<f64>) -> Array2<f64> {
    let (nx, ny) = (domain.nx, domain.ny);
    if ny == 1 {
        return Array2::zeros((nx, 1));
    }
    let dy = domain.dy();
    let mut out = Array2::zeros((nx, ny));
    for i in 0..nx {
        for j in 0..ny {
            out[[i, j]] = if j == 0 {
                (-3.0 * f[[i, 0]] + 4.0 * f[[i, 1]] - f[[i, 2]]) / (2.0 * dy)
            } else if j == ny - 1 {
                (3.0 * f[[i, ny - 1]] - 4.0 * f[[i, ny - 2]] + f[[i, ny - 3]]) / (2.0 * dy)
            } else {
                (f[[i, j + 1]] - f[[i, j - 1]]) / (2.0 * dy)
            };
        }
    }
    out
}

fn second_x(domain: &Domain, f: &Array2<f64>) -> Array2<f64> {
    let (nx, ny) = (domain.nx, domain.ny);
    let dx2 = domain.dx() * domain.dx();
    let mut out = Array2::zeros((nx, ny));
    for j in 0..ny {
        for i in 0..nx {
            out[[i, j]] = if i == 0 {
                (2.0 * f[[0, j]] - 5.0 * f[[1, j]] + 4.0 * f[[2, j]] - f[[3, j]]) / dx2
            } else if i == nx - 1 {
                (2.0 * f[[nx - 1, j]] - 5.0 * f[[nx - 2, j]] + 4.0 * f[[nx - 3, j]]
                    - f[[nx - 4, j]])
                    / dx2
            } else {
                (f[[i + 1, j]] - 2.0 * f[[i, j]] + f[[i - 1, j]]) / dx2
            };
        }
    }
    out
}

fn second_y(domain: &Domain, f: &Array2<f64>) -> Array2<f64> {
    let (nx, ny) = (domain.nx, domain.ny);
    if ny == 1 {
        return Array2::zeros((nx, 1));
    }
    let dy2 = domain.dy() * domain.dy();
    let mut out = Array2::zeros((nx, ny));
    for i in 0..nx {
        for j in 0..ny {
            out[[i, j]] = if j == 0 {
                (2.0 * f[[i, 0]] - 5.0 * f[[i, 1]] + 4.0 * f[[i, 2]] - f[[i, 3]]) / dy2
            } else if j == ny - 1 {
                (2.0 * f[[i, ny - 1]] - 5.0 * f[[i, ny - 2]] + 4.0 * f[[i, ny - 3]]
                    - f[[i, ny - 4]])
                    / dy2
            } else {
                (f[[i, j + 1]] - 2.0 * f[[i, j]] + f[[i, j - 1]]) / dy2
            };
        }
    }
    out
}

/// Laplacian: trace of the second-difference stencils.
pub fn laplacian(domain: &Domain, f: &Array2<f64>) -> Array2<f64> {
    let mut out = second_x(domain, f);
    if domain.ny > 1 {
        out += &second_y(domain, f);
    }
    out
}

/// Hessian entries (fxx, fxy, fyy); fxy and fyy vanish on 1d grids.
pub fn hessian(domain: &Domain, f: &Array2<f64>) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let fxx = second_x(domain, f);
    let fyy = second_y(domain, f);
    let fxy = if domain.ny > 1 {
        let gx = grad_x(domain, f);
        grad_y(domain, &gx)
    } else {
        Array2::zeros(f.dim())
    };
    (fxx, fxy, fyy)
}

/// Midpoint quadrature of a cell field.
pub fn integrate(domain: &Domain, f: &Array2<f64>) -> f64 {
    f.sum() * domain.cell_volume()
}

/// Squared Frobenius norm of the Hessian, cellwise.
pub fn hessian_norm_sq(domain: &Domain, f: &Array2<f64>) -> Array2<f64> {
    let (fxx, fxy, fyy) = hessian(domain, f);
    let mut out = Array2::zeros(f.dim());
    for ((o, a), (b, c)) in out
        .iter_mut()
        .zip(fxx.iter())
        .zip(fxy.iter().zip(fyy.iter()))
    {
        *o = a * a + 2.0 * b * b + c * c;
    }
    out
}

/// Pointwise Bochner inequality |Hess f|^2 >= (Lap f)^2 / d, which holds
/// exactly for the consistent stencils above.
pub fn bochner_defect(domain: &Domain, f: &Density) -> f64 {
    let d = domain.dim as f64;
    let h2 = hessian_norm_sq(domain, &f.values);
    let lap = laplacian(domain, &f.values);
    let mut worst = 0.0_f64;
    for (h, l) in h2.iter().zip(lap.iter()) {
        worst = worst.max(l * l / d - h);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_are_second_order() {
        let domain = Domain::line(256, 1.0).unwrap();
        let f = Density::from_fn(domain, |x, _| (2.0 * x).sin());
        let gx = grad_x(&domain, &f.values);
        let lap = laplacian(&domain, &f.values);
        let h2 = domain.dx() * domain.dx();
        for i in 0..domain.nx {
            let (x, _) = domain.center(i, 0);
            assert!((gx[[i, 0]] - 2.0 * (2.0 * x).cos()).abs() < 30.0 * h2);
            assert!((lap[[i, 0]] + 4.0 * (2.0 * x).sin()).abs() < 60.0 * h2);
        }
    }

    #[test]
    fn bochner_holds_with_equality_for_radial_quadratic() {
        let domain = Domain::rect(16, 16, 1.0, 1.0).unwrap();
        let quad = Density::from_fn(domain, |x, y| 0.5 * (x * x + y * y));
        // Hess = I: |Hess|^2 = 2 = (Lap)^2 / 2 exactly.
        assert!(bochner_defect(&domain, &quad) < 1e-10);
        let skew = Density::from_fn(domain, |x, y| (3.0 * x).sin() * (2.0 * y).cos());
        assert!(bochner_defect(&domain, &skew) <= 1e-10);
    }

    #[test]
    fn mixed_derivative_is_symmetric_enough() {
        let domain = Domain::rect(64, 64, 1.0, 1.0).unwrap();
        let f = Density::from_fn(domain, |x, y| (x * y * 3.0).sin());
        let gx = grad_x(&domain, &f.values);
        let fxy = grad_y(&domain, &gx);
        let gy = grad_y(&domain, &f.values);
        let fyx = grad_x(&domain, &gy);
        let h2 = domain.dx() * domain.dx();
        for (a, b) in fxy.iter().zip(fyx.iter()) {
            assert!((a - b).abs() < 200.0 * h2);
        }
    }
}
