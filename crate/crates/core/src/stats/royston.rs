//! Royston's H test of multivariate normality, here for two margins.
//!
//! Each margin's Shapiro-Wilk p-value `p_j` becomes `R_j = Φ⁻¹(p_j / 2)²`,
//! roughly χ²₁ under the null. The sum is rescaled by an equivalent number of
//! degrees of freedom `e = d / (1 + (d − 1) c̄)`, where `c̄` averages
//! `c(r) = r^λ (1 − μ/ν (1 − r)^μ)` over margin pairs (λ = 5, μ = 0.715,
//! ν a cubic in ln n), and `H = e Σ R_j / d ~ χ²_e`.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::shapiro::{shapiro_wilk_values, w_equivalent};
use super::{check_paired, mean, sum_sq_dev, NormalityKind, NormalityTestResult, SampleSeries};
use crate::error::{Error, Result};
use crate::numeric::norm_quantile;

const LAMBDA: i32 = 5;
const MU: f64 = 0.715;

fn nu(n: usize) -> f64 {
    let l = (n as f64).ln();
    0.21364 + 0.015124 * l * l - 0.0018034 * l * l * l
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    sab / (sum_sq_dev(a, ma) * sum_sq_dev(b, mb)).sqrt()
}

/// Composite bivariate normality test on paired series.
pub fn royston_bivariate(a: &SampleSeries, b: &SampleSeries) -> Result<NormalityTestResult> {
    royston_values(a.values(), b.values())
}

pub(crate) fn royston_values(a: &[f64], b: &[f64]) -> Result<NormalityTestResult> {
    check_paired(a, b, 3)?;
    let n = a.len();
    let margins = [shapiro_wilk_values(a)?, shapiro_wilk_values(b)?];
    let dims = margins.len() as f64;

    let chi_contrib: f64 = margins.iter().map(|&(_, p)| norm_quantile(p / 2.0).powi(2)).sum();

    let r = correlation(a, b).clamp(-1.0, 1.0);
    let c = r.powi(LAMBDA) * (1.0 - MU / nu(n) * (1.0 - r).powf(MU));
    // both off-diagonal entries equal c, so their mean is c
    let edf = dims / (1.0 + (dims - 1.0) * c);
    let h = edf * chi_contrib / dims;

    let p = if h.is_infinite() {
        0.0
    } else {
        ChiSquared::new(edf)
            .map_err(|e| Error::Degenerate(format!("equivalent degrees of freedom {edf}: {e}")))?
            .sf(h)
    };
    Ok(NormalityTestResult {
        w_stat: w_equivalent(p, n),
        p_value: p,
        n,
        kind: NormalityKind::BivariateComposite,
        h_stat: Some(h),
        edf: Some(edf),
    })
}
