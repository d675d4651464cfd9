//! Ordinary least squares on transformed data.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual in the fitted (transformed) coordinates.
    pub rms_residual: f64,
    pub points: usize,
}

/// `y = intercept + slope * x`. Needs two distinct abscissae.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(x, y)| x.is_finite() && y.is_finite()).map(|(&x, &y)| (x, y)).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Some(LineFit { slope, intercept, rms_residual: (rss / n).sqrt(), points: pts.len() })
}

/// `y = a * x^slope`, fitted as a line in log-log space (`a = e^intercept`).
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).unzip();
    fit_line(&lx, &ly)
}

/// `y = a * e^{b x}`, fitted as a line in `(x, ln y)` (`b = slope`).
pub fn fit_exponential(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs.iter().zip(ys).filter(|(_, y)| **y > 0.0).map(|(x, y)| (*x, y.ln())).unzip();
    fit_line(&lx, &ly)
}

/// Prefactor `C` of `y = C x^{-1/2}` with the exponent held fixed.
pub fn fit_inverse_sqrt(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let logs: Vec<f64> = xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| y.ln() + 0.5 * x.ln()).collect();
    (!logs.is_empty()).then(|| (logs.iter().sum::<f64>() / logs.len() as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_laws() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let f = fit_exponential(&xs, &xs.map(|x| 3.46 * (0.7 * x).exp())).unwrap();
        assert!((f.slope - 0.7).abs() < 1e-12 && (f.intercept.exp() - 3.46).abs() < 1e-10);
        let ns = [100.0, 1000.0, 10000.0];
        let ys = ns.map(|n: f64| 1.6 / n.sqrt());
        let p = fit_power_law(&ns, &ys).unwrap();
        assert!((p.slope + 0.5).abs() < 1e-12 && p.rms_residual < 1e-12);
        assert!((fit_inverse_sqrt(&ns, &ys).unwrap() - 1.6).abs() < 1e-12);
        assert!(fit_line(&[1.0], &[2.0]).is_none());
    }
}
