use serde::{Deserialize, Serialize};

use super::{mean, sum_sq_dev, SampleSeries};
use crate::error::{Error, Result};
use crate::numeric::norm_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Description {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
}

pub fn describe(series: &SampleSeries) -> Description {
    describe_values(series.values())
}

pub(crate) fn describe_values(values: &[f64]) -> Description {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
    let m = mean(values);
    let std = if n > 1 { (sum_sq_dev(values, m) / (n - 1) as f64).sqrt() } else { 0.0 };
    Description { n, min: sorted[0], max: sorted[n - 1], mean: m, median, std }
}

/// Default points `k = Φ⁻¹(PD)`.
pub fn probit_transform(probabilities: &[f64]) -> Result<Vec<f64>> {
    probabilities
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if p > 0.0 && p < 1.0 {
                Ok(norm_quantile(p))
            } else {
                Err(Error::Validation(vec![format!("probability #{i} = {p} is outside (0, 1)")]))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::norm_cdf;

    fn series(values: &[f64]) -> SampleSeries {
        SampleSeries::new("t", values.to_vec(), None).unwrap()
    }

    #[test]
    fn constant_series() {
        let d = describe(&series(&[0.3; 5]));
        assert_eq!((d.min, d.max, d.mean, d.median, d.std), (0.3, 0.3, 0.3, 0.3, 0.0));
    }

    #[test]
    fn small_series_by_hand() {
        let d = describe(&series(&[3.0, 1.0, 2.0]));
        assert_eq!((d.mean, d.median, d.std), (2.0, 2.0, 1.0));
        let d = describe(&series(&[4.0, 1.0, 2.0, 10.0]));
        assert_eq!(d.median, 3.0);
        assert_eq!((d.min, d.max), (1.0, 10.0));
    }

    #[test]
    fn probit_values() {
        assert_eq!(probit_transform(&[0.5]).unwrap(), vec![0.0]);
        // bisection oracle on Φ
        let (mut lo, mut hi) = (-10.0_f64, 10.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if norm_cdf(mid) < 0.0159 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let k = probit_transform(&[0.0159]).unwrap()[0];
        assert!((k - lo).abs() < 1e-9);
        assert!((k + 2.146_916).abs() < 1e-6);
        let pair = probit_transform(&[0.001, 0.999]).unwrap();
        assert!((pair[0] + 3.090_232).abs() < 1e-6);
        assert!((pair[0] + pair[1]).abs() < 1e-12);
    }

    #[test]
    fn probit_rejects_boundaries() {
        for bad in [0.0, 1.0, -0.2, 1.3, f64::NAN] {
            assert!(probit_transform(&[0.2, bad]).is_err());
        }
    }
}
