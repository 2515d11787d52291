//! Small ordinary-least-squares helper for slope fits.

/// Slope estimate with a crude confidence half-width (two standard errors).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub half_width: f64,
}

/// Fit y = a + b x by least squares.
pub fn fit_line(x: &[f64], y: &[f64]) -> SlopeFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    assert!(x.len() >= 2);
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx) * (xi - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let dof = (x.len().max(3) - 2) as f64;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let e = yi - (intercept + slope * xi);
            e * e
        })
        .sum();
    let stderr = (ss_res / dof / sxx).sqrt();
    SlopeFit {
        slope,
        intercept,
        half_width: 2.0 * stderr,
    }
}

/// Fit log|y| against log x; pairs with y == 0 are rejected by assert.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> SlopeFit {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y
        .iter()
        .map(|v| {
            assert!(*v != 0.0, "log-log fit requires nonzero values");
            v.abs().ln()
        })
        .collect();
    fit_line(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let x: Vec<f64> = vec![0.1, 0.05, 0.025, 0.0125];
        let y: Vec<f64> = x.iter().map(|e| -3.0 / (e * e)).collect();
        let fit = fit_loglog(&x, &y);
        assert!((fit.slope + 2.0).abs() < 1e-12);
    }
}
