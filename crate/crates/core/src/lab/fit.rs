//! Least-squares power-law fits.

use serde::{Deserialize, Serialize};

/// Fits with a log-log RMS residual above this are inconclusive.
pub const FIT_RESIDUAL_MAX: f64 = 0.2;

/// `log y = exponent log x + intercept`, natural logs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub intercept: f64,
    /// RMS of the residuals in log space.
    pub residual: f64,
    pub points: usize,
}

impl PowerFit {
    pub fn conclusive(&self) -> bool {
        self.residual <= FIT_RESIDUAL_MAX && self.exponent.is_finite()
    }
}

/// Fit over the points with `x > 0` and `y > 0`; `None` with fewer than two.
pub fn fit_power(xs: &[f64], ys: &[f64]) -> Option<PowerFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let (exponent, intercept) = linear_fit(&pts)?;
    let residual = (pts
        .iter()
        .map(|(x, y)| (y - exponent * x - intercept).powi(2))
        .sum::<f64>()
        / pts.len() as f64)
        .sqrt();
    Some(PowerFit {
        exponent,
        intercept,
        residual,
        points: pts.len(),
    })
}

/// Largest log-log slope between neighbours in `x` over the points with
/// `x > 0`, `y > 0`; bounds the fitted exponent from above.
pub fn max_local_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.windows(2)
        .filter(|w| w[1].0 > w[0].0)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .reduce(f64::max)
}

/// Ordinary least squares `y = a x + b`.
pub fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
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
    let a = sxy / sxx;
    Some((a, my - a * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn local_slope_bounds_the_fit() {
        let xs = [8.0, 16.0, 32.0, 64.0];
        let ys = [1.56e-3, 1.33e-3, 4.7e-4, 1.78e-4];
        let f = fit_power(&xs, &ys).unwrap();
        let m = max_local_slope(&xs, &ys).unwrap();
        assert!(m >= f.exponent);
        assert!((m - (1.33f64 / 1.56).log2()).abs() < 1e-12);
        assert_eq!(max_local_slope(&[1.0], &[1.0]), None);
        assert_eq!(max_local_slope(&[2.0, 1.0], &[4.0, 1.0]), Some(2.0));
    }

    #[test]
    fn exact_power_has_zero_residual() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        let f = fit_power(&xs, &ys).unwrap();
        assert!((f.exponent - 1.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        assert!(f.conclusive());
    }

    #[test]
    fn nonpositive_points_are_dropped() {
        let f = fit_power(&[0.0, 1.0, 2.0, -1.0], &[5.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!(f.points, 2);
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!(fit_power(&[1.0, 2.0], &[0.0, 1.0]).is_none());
        assert!(fit_power(&[2.0, 2.0], &[1.0, 3.0]).is_none());
    }

    #[test]
    fn zigzag_is_inconclusive() {
        let f = fit_power(&[1.0, 2.0, 4.0, 8.0], &[1.0, 10.0, 1.0, 10.0]).unwrap();
        assert!(!f.conclusive());
    }

    proptest! {
        #[test]
        fn local_slope_dominates_fit(ys in proptest::collection::vec(1e-3f64..1e3, 3..8)) {
            let xs: Vec<f64> = (0..ys.len()).map(|k| 2f64.powi(k as i32)).collect();
            let f = fit_power(&xs, &ys).unwrap();
            prop_assert!(max_local_slope(&xs, &ys).unwrap() >= f.exponent - 1e-9);
        }

        #[test]
        fn recovers_exponent(p in -3.0f64..3.0, c in 0.01f64..100.0) {
            let xs: Vec<f64> = (0..6).map(|i| 2f64.powi(i)).collect();
            let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(p)).collect();
            let f = fit_power(&xs, &ys).unwrap();
            prop_assert!((f.exponent - p).abs() < 1e-9);
            prop_assert!(f.residual < 1e-9);
        }
    }
}
