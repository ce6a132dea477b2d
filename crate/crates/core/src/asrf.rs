//! Asymptotic single risk factor (ASRF) closed forms.
//!
//! Obligor log-assets are `X = sqrt(rho) M + sqrt(1 - rho) eps`; an obligor
//! defaults when `X < k` with `k = Φ⁻¹(PD)`. In the infinite-granularity
//! limit the portfolio loss rate is a deterministic function of the common
//! factor `M`, which gives the closed forms below. Maturity adjustment is
//! fixed at one.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_open_unit, Error, Result};
use crate::numeric::{norm_cdf, norm_quantile};

/// Point estimates of PD and LGD used by the naïve formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointEstimates {
    pub pd_hat: f64,
    pub lgd_hat: f64,
}

impl PointEstimates {
    pub fn new(pd_hat: f64, lgd_hat: f64) -> Result<Self> {
        ensure_open_unit("pd_hat", pd_hat)?;
        if !(0.0..=1.0).contains(&lgd_hat) {
            return Err(Error::domain("lgd_hat", lgd_hat, "must lie in [0, 1]"));
        }
        Ok(Self { pd_hat, lgd_hat })
    }

    /// `EL = LGD̂ · PD̂`.
    pub fn expected_loss(&self) -> f64 {
        self.lgd_hat * self.pd_hat
    }

    fn validate(&self) -> Result<()> {
        Self::new(self.pd_hat, self.lgd_hat).map(|_| ())
    }
}

/// VaR, expected loss and regulatory capital per unit exposure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapitalResult {
    pub var: f64,
    pub expected_loss: f64,
    pub rc: f64,
    pub alpha: f64,
}

impl CapitalResult {
    /// Builds a result with `rc = var - expected_loss`.
    pub fn new(var: f64, expected_loss: f64, alpha: f64) -> Self {
        Self { var, expected_loss, rc: var - expected_loss, alpha }
    }
}

const BASEL_SHAPE: f64 = 50.0;
const RHO_LOW: f64 = 0.12;
const RHO_HIGH: f64 = 0.24;

/// Basel asset correlation for corporate, sovereign and bank exposures.
///
/// Interpolates between 0.24 at `pd = 0` and 0.12 at `pd = 1` with weight
/// `(1 - e^{-50 pd}) / (1 - e^{-50})`.
pub fn basel_correlation(pd: f64) -> Result<f64> {
    ensure_finite("pd", pd)?;
    if !(0.0..=1.0).contains(&pd) {
        return Err(Error::domain("pd", pd, "must lie in [0, 1]"));
    }
    Ok(basel_correlation_unchecked(pd))
}

#[inline]
pub(crate) fn basel_correlation_unchecked(pd: f64) -> f64 {
    let weight = -(-BASEL_SHAPE * pd).exp_m1() / -(-BASEL_SHAPE).exp_m1();
    RHO_LOW * weight + RHO_HIGH * (1.0 - weight)
}

/// Expected loss rate of an asymptotic portfolio conditional on the common
/// factor: `lgd · Φ((k − √ρ m) / √(1 − ρ))`.
pub fn conditional_expected_loss(m: f64, k: f64, lgd: f64, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::domain("rho", rho, "must lie in (0, 1)"));
    }
    ensure_finite("lgd", lgd)?;
    Ok(conditional_expected_loss_unchecked(m, k, lgd, rho))
}

#[inline]
pub(crate) fn conditional_default_rate(m: f64, k: f64, rho: f64) -> f64 {
    norm_cdf((k - rho.sqrt() * m) / (1.0 - rho).sqrt())
}

#[inline]
pub(crate) fn conditional_expected_loss_unchecked(m: f64, k: f64, lgd: f64, rho: f64) -> f64 {
    if lgd == 0.0 {
        return 0.0;
    }
    lgd * conditional_default_rate(m, k, rho)
}

/// Naïve IRB capital: PD and LGD treated as known and equal to their point
/// estimates. The VaR term is the conditional loss at the `1 − alpha`
/// quantile of the factor.
pub fn naive_capital(pe: &PointEstimates, alpha: f64) -> Result<CapitalResult> {
    pe.validate()?;
    ensure_open_unit("alpha", alpha)?;
    let rho = basel_correlation_unchecked(pe.pd_hat);
    let k = norm_quantile(pe.pd_hat);
    let stressed_factor = norm_quantile(1.0 - alpha);
    let var = conditional_expected_loss_unchecked(stressed_factor, k, pe.lgd_hat, rho);
    Ok(CapitalResult::new(var, pe.expected_loss(), alpha))
}
