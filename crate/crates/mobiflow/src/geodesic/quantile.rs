//! 1d quadratic Wasserstein distance via the quantile formula.
//!
//! For densities on an interval the optimal coupling is the monotone
//! rearrangement, so W2^2 = int_0^mass |F0^{-1}(q) - F1^{-1}(q)|^2 dq. The
//! cell-wise CDFs are piecewise linear, hence so are their inverses between
//! the merged breakpoints, and each segment integrates exactly.

use crate::error::{Error, Result};
use crate::grid::Density;

struct Cdf {
    /// Face positions x_0 < ... < x_n.
    x: Vec<f64>,
    /// Cumulative masses at faces, f_0 = 0 <= ... <= f_n = mass.
    f: Vec<f64>,
}

impl Cdf {
    fn build(rho: &Density) -> Cdf {
        let n = rho.domain.nx;
        let dx = rho.domain.dx();
        let mut x = Vec::with_capacity(n + 1);
        let mut f = Vec::with_capacity(n + 1);
        x.push(0.0);
        f.push(0.0);
        let mut acc = 0.0;
        for i in 0..n {
            acc += rho.values[[i, 0]].max(0.0) * dx;
            x.push((i + 1) as f64 * dx);
            f.push(acc);
        }
        Cdf { x, f }
    }

    /// Left-continuous inverse F^{-1}(q).
    fn quantile(&self, q: f64) -> f64 {
        let n = self.f.len();
        if q <= 0.0 {
            return self.x[0];
        }
        if q >= self.f[n - 1] {
            return self.x[n - 1];
        }
        let mut i = self.f.partition_point(|v| *v < q);
        i = i.clamp(1, n - 1);
        let (f0, f1) = (self.f[i - 1], self.f[i]);
        if f1 > f0 {
            let t = (q - f0) / (f1 - f0);
            self.x[i - 1] + t * (self.x[i] - self.x[i - 1])
        } else {
            self.x[i - 1]
        }
    }
}

/// W2 between two nonnegative 1d densities of equal mass.
pub fn wasserstein_1d(rho0: &Density, rho1: &Density) -> Result<f64> {
    if rho0.domain.dim != 1 || rho1.domain.dim != 1 {
        return Err(Error::InvalidSpec("quantile formula needs 1d densities".into()));
    }
    let (m0, m1) = (rho0.mass(), rho1.mass());
    let rel = (m0 - m1).abs() / m0.abs().max(m1.abs()).max(1e-300);
    if rel > 1e-10 {
        return Err(Error::MassMismatch {
            lhs: m0,
            rhs: m1,
            rel,
        });
    }
    let c0 = Cdf::build(rho0);
    let c1 = Cdf::build(rho1);
    // Merge breakpoints in mass coordinates.
    let mut qs: Vec<f64> = c0.f.iter().chain(c1.f.iter()).copied().collect();
    qs.sort_by(|a, b| a.partial_cmp(b).expect("finite masses"));
    qs.dedup_by(|a, b| (*a - *b).abs() < 1e-15 * m0.max(1.0));
    let mut total = 0.0;
    for w in qs.windows(2) {
        let (qa, qb) = (w[0], w[1]);
        if qb <= qa {
            continue;
        }
        // The displacement is linear in q on this segment.
        let da = c0.quantile(qa) - c1.quantile(qa);
        let db = c0.quantile(qb) - c1.quantile(qb);
        total += (qb - qa) * (da * da + da * db + db * db) / 3.0;
    }
    Ok(total.sqrt())
}
