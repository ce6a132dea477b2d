//! Checks run on annual rate series before the Gaussian uncertainty model is
//! trusted: descriptive statistics, the probit transform to default points,
//! univariate and bivariate normality tests, correlation and regression.

mod correlation;
mod descriptive;
mod qq;
mod regression;
mod royston;
mod shapiro;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use correlation::{pearson, pearson_from_coefficient, CorrelationResult, FISHER_Z_95};
pub use descriptive::{describe, probit_transform, Description};
pub use qq::{qq_points, QqScale};
pub use regression::{linear_fit, RegressionResult};
pub use royston::royston_bivariate;
pub use shapiro::{shapiro_wilk, shapiro_wilk_p_value, shapiro_wilk_values, w_equivalent};

/// Minimum sample size for the Shapiro-Wilk statistic.
pub const MIN_SERIES_LEN: usize = 3;

/// A labelled series of annual observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSeries {
    label: String,
    values: Vec<f64>,
    years: Option<Vec<i32>>,
}

impl SampleSeries {
    pub fn new(label: impl Into<String>, values: Vec<f64>, years: Option<Vec<i32>>) -> Result<Self> {
        if values.len() < MIN_SERIES_LEN {
            return Err(Error::SampleSize { n: values.len(), min: MIN_SERIES_LEN, max: usize::MAX });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(vec![format!("value #{i} is not finite")]));
        }
        if let Some(years) = &years {
            if years.len() != values.len() {
                return Err(Error::Validation(vec![format!(
                    "{} years for {} values",
                    years.len(),
                    values.len()
                )]));
            }
        }
        Ok(Self { label: label.into(), values, years })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn years(&self) -> Option<&[i32]> {
        self.years.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalityKind {
    Univariate,
    BivariateComposite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityTestResult {
    /// Shapiro-Wilk W. For the bivariate composite test this is the W that a
    /// univariate sample of the same size would need to reach the same
    /// p-value.
    pub w_stat: f64,
    pub p_value: f64,
    pub n: usize,
    pub kind: NormalityKind,
    /// Royston's H and its equivalent degrees of freedom (composite only).
    pub h_stat: Option<f64>,
    pub edf: Option<f64>,
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sum of squared deviations from the mean.
pub(crate) fn sum_sq_dev(values: &[f64], centre: f64) -> f64 {
    values.iter().map(|v| (v - centre) * (v - centre)).sum()
}

pub(crate) fn check_paired(a: &[f64], b: &[f64], min: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Validation(vec![format!("series lengths differ: {} vs {}", a.len(), b.len())]));
    }
    if a.len() < min {
        return Err(Error::SampleSize { n: a.len(), min, max: usize::MAX });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_validation() {
        assert!(SampleSeries::new("x", vec![1.0, 2.0], None).is_err());
        assert!(SampleSeries::new("x", vec![1.0, f64::NAN, 3.0], None).is_err());
        assert!(SampleSeries::new("x", vec![1.0, 2.0, 3.0], Some(vec![2000, 2001])).is_err());
        let s = SampleSeries::new("x", vec![1.0, 2.0, 3.0], Some(vec![2000, 2001, 2002])).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.years().unwrap()[2], 2002);
    }
}
