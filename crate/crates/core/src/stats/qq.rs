use serde::{Deserialize, Serialize};

use super::{mean, sum_sq_dev};
use crate::numeric::norm_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QqScale {
    /// Φ⁻¹ of the plotting positions against the raw sorted sample.
    #[default]
    Raw,
    /// Both coordinates z-scored by their own mean and standard deviation,
    /// so any affine image of the normal scores falls on the identity line.
    Standardized,
}

/// Normal Q-Q points `(theoretical, sample)` with Blom plotting positions
/// `(i − 0.375)/(n + 0.25)`.
pub fn qq_points(values: &[f64], scale: QqScale) -> Vec<(f64, f64)> {
    let n = values.len();
    let mut sample = values.to_vec();
    sample.sort_unstable_by(f64::total_cmp);
    let mut theoretical: Vec<f64> =
        (1..=n).map(|i| norm_quantile((i as f64 - 0.375) / (n as f64 + 0.25))).collect();

    if scale == QqScale::Standardized && n > 1 {
        zscore(&mut sample);
        zscore(&mut theoretical);
    }
    theoretical.into_iter().zip(sample).collect()
}

fn zscore(values: &mut [f64]) {
    let m = mean(values);
    let sd = (sum_sq_dev(values, m) / (values.len() - 1) as f64).sqrt();
    if sd > 0.0 {
        values.iter_mut().for_each(|v| *v = (*v - m) / sd);
    }
}
