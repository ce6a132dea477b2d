use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{check_paired, mean, sum_sq_dev, SampleSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// `1 − (1 − r²)(n − 1)/(n − 2)`.
    pub adj_r2: f64,
    /// Two-sided p-value of the slope t-statistic.
    pub slope_p: f64,
    pub n: usize,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(x: &SampleSeries, y: &SampleSeries) -> Result<RegressionResult> {
    linear_fit_values(x.values(), y.values())
}

pub(crate) fn linear_fit_values(x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    check_paired(x, y, 3)?;
    let n = x.len();
    let nf = n as f64;
    let (mx, my) = (mean(x), mean(y));
    let sxx = sum_sq_dev(x, mx);
    if sxx == 0.0 {
        return Err(Error::Degenerate("regressor is constant".into()));
    }
    let syy = sum_sq_dev(y, my);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();

    let r2 = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let adj_r2 = 1.0 - (1.0 - r2) * (nf - 1.0) / (nf - 2.0);

    let slope_p = if sse <= 1e-30 * syy.max(f64::MIN_POSITIVE) {
        if slope == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        let t = slope / se;
        let dist = StudentsT::new(0.0, 1.0, nf - 2.0).expect("n >= 3");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(RegressionResult { slope, intercept, r2, adj_r2, slope_p, n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let fit = linear_fit_values(&x, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-14);
        assert!((fit.intercept - 1.0).abs() < 1e-14);
        assert!((fit.adj_r2 - 1.0).abs() < 1e-14);
        assert_eq!(fit.slope_p, 0.0);
    }

    #[test]
    fn three_points_by_hand() {
        let fit = linear_fit_values(&[0.0, 1.0, 2.0], &[0.0, 1.0, 1.0]).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-15);
        assert!((fit.intercept - 1.0 / 6.0).abs() < 1e-15);
        // r2 = 0.75 by hand, adj = 1 - 0.25 * 2 / 1
        assert!((fit.r2 - 0.75).abs() < 1e-14);
        assert!((fit.adj_r2 - 0.5).abs() < 1e-14);
        assert!(fit.adj_r2 <= fit.r2 && fit.r2 <= 1.0);
    }

    #[test]
    fn constant_regressor_rejected() {
        assert!(linear_fit_values(&[1.0; 4], &[1.0, 2.0, 3.0, 4.0]).is_err());
    }
}
