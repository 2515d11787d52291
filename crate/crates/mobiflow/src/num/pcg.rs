//! Preconditioned conjugate gradient on flat slices.
//!
//! Operators and preconditioners are closures writing into caller-provided
//! buffers. Reductions are sequential so results do not depend on the thread
//! count.

/// Outcome of a CG solve.
#[derive(Debug, Clone, Copy)]
pub struct CgReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve A x = b for symmetric positive (semi-)definite A.
///
/// `apply` computes y = A x; `precond` computes y = M^{-1} x and must also be
/// symmetric positive definite. `x` holds the initial guess on entry and the
/// solution on exit. Convergence: ||r||_2 <= tol (caller scales tol).
pub fn pcg(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    precond: &mut dyn FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> CgReport {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];

    apply(x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    let mut rnorm = dot(&r, &r).sqrt();
    if rnorm <= tol {
        return CgReport {
            iterations: 0,
            residual: rnorm,
            converged: true,
        };
    }
    precond(&r, &mut z);
    p.copy_from_slice(&z);
    let mut rz = dot(&r, &z);

    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // Null direction of a semi-definite operator; nothing to gain.
            return CgReport {
                iterations: it,
                residual: rnorm,
                converged: rnorm <= tol,
            };
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = dot(&r, &r).sqrt();
        if rnorm <= tol {
            return CgReport {
                iterations: it,
                residual: rnorm,
                converged: true,
            };
        }
        precond(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgReport {
        iterations: max_iter,
        residual: rnorm,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        // A = tridiag(-1, 3, -1), n = 50.
        let n = 50;
        let mut apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 3.0 * x[i] - l - r;
            }
        };
        let mut precond = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = x[i] / 3.0;
            }
        };
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        apply(&xs, &mut b);
        let mut x = vec![0.0; n];
        let rep = pcg(&mut apply, &mut precond, &b, &mut x, 1e-12, 500);
        assert!(rep.converged);
        for i in 0..n {
            assert!((x[i] - xs[i]).abs() < 1e-9);
        }
    }
}
