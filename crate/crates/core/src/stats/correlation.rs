use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{check_paired, mean, sum_sq_dev, SampleSeries};
use crate::error::{Error, Result};

/// Two-sided 95% normal critical value used for the Fisher interval.
pub const FISHER_Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Two-sided p-value of `r = 0` (Student t, n − 2 degrees of freedom).
    pub p_value: f64,
    pub n: usize,
}

/// Pearson correlation with its Fisher-z 95% interval and t-test p-value.
pub fn pearson(a: &SampleSeries, b: &SampleSeries) -> Result<CorrelationResult> {
    pearson_values(a.values(), b.values())
}

pub(crate) fn pearson_values(a: &[f64], b: &[f64]) -> Result<CorrelationResult> {
    check_paired(a, b, 4)?;
    let (ma, mb) = (mean(a), mean(b));
    let (saa, sbb) = (sum_sq_dev(a, ma), sum_sq_dev(b, mb));
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("correlation of a constant series".into()));
    }
    let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let r = (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0);
    pearson_from_coefficient(r, a.len())
}

/// Interval and p-value for a given coefficient and sample size.
pub fn pearson_from_coefficient(r: f64, n: usize) -> Result<CorrelationResult> {
    if n < 4 {
        return Err(Error::SampleSize { n, min: 4, max: usize::MAX });
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::domain("r", r, "must lie in [-1, 1]"));
    }
    let nf = n as f64;
    let z = r.atanh();
    let half = FISHER_Z_95 / (nf - 3.0).sqrt();
    let (ci_low, ci_high) = if z.is_finite() { ((z - half).tanh(), (z + half).tanh()) } else { (r, r) };

    let p_value = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * ((nf - 2.0) / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, nf - 2.0).expect("n >= 4 gives positive degrees of freedom");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(CorrelationResult { r, ci_low, ci_high, p_value, n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fisher_interval_fixtures() {
        let ar = pearson_from_coefficient(0.717, 37).unwrap();
        assert!((ar.ci_low - 0.511).abs() <= 3e-3 && (ar.ci_high - 0.844).abs() <= 3e-3, "{ar:?}");
        let sg = pearson_from_coefficient(0.599, 37).unwrap();
        assert!((sg.ci_low - 0.342).abs() <= 3e-3 && (sg.ci_high - 0.773).abs() <= 3e-3, "{sg:?}");
        let ratio = ar.p_value / 6.12e-7;
        assert!((1.0 / 1.1..=1.1).contains(&ratio), "p = {}", ar.p_value);
    }

    #[test]
    fn interval_symmetric_in_z_space() {
        for r in [-0.9, -0.3, 0.0, 0.45, 0.717, 0.98] {
            let c = pearson_from_coefficient(r, 30).unwrap();
            let left = c.r.atanh() - c.ci_low.atanh();
            let right = c.ci_high.atanh() - c.r.atanh();
            assert!((left - right).abs() < 1e-9);
            assert!(c.ci_low <= c.r && c.r <= c.ci_high);
        }
    }

    #[test]
    fn perfect_line() {
        let a: Vec<f64> = (0..10).map(f64::from).collect();
        let b: Vec<f64> = a.iter().map(|x| 3.0 * x - 1.0).collect();
        let c = pearson_values(&a, &b).unwrap();
        assert!((c.r - 1.0).abs() < 1e-15);
        assert!(c.p_value < 1e-12);
    }

    #[test]
    fn invariant_under_affine_maps() {
        let a = [0.3, 0.1, 0.5, 0.9, 0.4, 0.45, 0.2];
        let b = [1.0, 0.7, 1.4, 1.1, 0.9, 1.8, 0.5];
        let base = pearson_values(&a, &b).unwrap().r;
        let a2: Vec<f64> = a.iter().map(|x| 4.0 * x + 2.0).collect();
        let b2: Vec<f64> = b.iter().map(|x| 0.1 * x - 7.0).collect();
        assert!((pearson_values(&a2, &b2).unwrap().r - base).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(pearson_values(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(pearson_values(&[1.0, 2.0, 3.0, 4.0], &[2.0; 4]).is_err());
        assert!(pearson_values(&[1.0, 2.0, 3.0, 4.0], &[2.0; 5]).is_err());
    }
}
