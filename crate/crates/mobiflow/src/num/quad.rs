//! Scalar quadrature helpers.
//!
//! Composite Gauss-Legendre panels with optional square-root substitutions at
//! the endpoints. Several spec functions (minimal pressure, tail constants)
//! have integrands behaving like an inverse square root at an endpoint; the
//! substitution z = a + t^2 turns those into smooth integrands.

use std::sync::OnceLock;

const GL_ORDER: usize = 16;

/// Nodes and weights of the `GL_ORDER`-point Gauss-Legendre rule on [-1, 1],
/// computed once by Newton iteration on the Legendre polynomial.
fn gl_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Chebyshev-like initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                // Evaluate P_n(x) and P_n'(x) by the recurrence.
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// One Gauss-Legendre panel on [a, b].
pub fn gl_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gl_rule();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Adaptive quadrature on [a, b]: split panels until the refinement changes
/// the value by less than `tol` (absolute + relative).
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: usize) -> f64 {
        let mid = 0.5 * (a + b);
        let left = gl_panel(f, a, mid);
        let right = gl_panel(f, mid, b);
        let refined = left + right;
        if depth >= 30 || (refined - whole).abs() <= tol * (1.0 + refined.abs()) {
            return refined;
        }
        recurse(f, a, mid, left, 0.5 * tol, depth + 1)
            + recurse(f, mid, b, right, 0.5 * tol, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    let whole = gl_panel(f, a, b);
    recurse(f, a, b, whole, tol, 0)
}

/// Integral of f over [0, b] with an integrable singularity allowed at 0,
/// handled by the substitution z = t^2 (dz = 2t dt).
pub fn integrate_sqrt_left(f: &dyn Fn(f64) -> f64, b: f64, tol: f64) -> f64 {
    assert!(b >= 0.0);
    let g = |t: f64| 2.0 * t * f(t * t);
    integrate(&g, 0.0, b.sqrt(), tol)
}

/// Integral of f over [a, m] with an integrable singularity allowed at m,
/// via z = m - t^2.
pub fn integrate_sqrt_right(f: &dyn Fn(f64) -> f64, a: f64, m: f64, tol: f64) -> f64 {
    assert!(m >= a);
    let g = |t: f64| 2.0 * t * f(m - t * t);
    integrate(&g, 0.0, (m - a).sqrt(), tol)
}

/// Integral of f over [r, +inf) via the substitution z = r/t, t in (0, 1].
/// Returns +inf when successive truncations fail to settle (divergent tail).
pub fn integrate_tail(f: &dyn Fn(f64) -> f64, r: f64, tol: f64) -> f64 {
    assert!(r > 0.0);
    let g = |t: f64| {
        let z = r / t;
        f(z) * r / (t * t)
    };
    // The substituted integrand may still be singular at t = 0; probe whether
    // it is integrable by comparing shrinking left panels.
    let head = |lo: f64| integrate(&g, lo, 1.0, tol);
    let mut prev = head(1e-4);
    for &lo in &[1e-6, 1e-8, 1e-10] {
        let next = head(lo);
        if !next.is_finite() {
            return f64::INFINITY;
        }
        if (next - prev).abs() <= 1e-8 * (1.0 + next.abs()) {
            return next;
        }
        prev = next;
    }
    f64::INFINITY
}

/// Cumulative integral of `f` from 0 along an increasing grid, with the first
/// panel [0, grid[0]] evaluated under the z = t^2 substitution. Returns the
/// values of F(grid[i]) = int_0^{grid[i]} f.
pub fn cumulative_from_zero(f: &dyn Fn(f64) -> f64, grid: &[f64], tol: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = integrate_sqrt_left(f, grid[0], tol);
    out.push(acc);
    for w in grid.windows(2) {
        acc += gl_panel(f, w[0], w[1]);
        out.push(acc);
    }
    out
}

/// Log-uniform grid with `n` points on [lo, hi].
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
