//! Gaussian law of parameter uncertainty over the default point `k` and LGD.
//!
//! `k ~ N(k̂, σ_k²)` and `LGD ~ N(LGD̂, σ_LGD²)` with Pearson correlation
//! `ρ_LGD-k`. The mean default point is not `Φ⁻¹(PD̂)`: it is the value for
//! which `E[Φ(k)] = PD̂`.

use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_open_unit, Error, Result};
use crate::numeric::{find_root, gauss_hermite, norm_cdf, norm_pdf, norm_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyModel {
    pub k_hat: f64,
    pub sigma_k: f64,
    pub lgd_hat: f64,
    pub sigma_lgd: f64,
    pub rho_lgd_k: f64,
}

impl UncertaintyModel {
    pub fn new(k_hat: f64, sigma_k: f64, lgd_hat: f64, sigma_lgd: f64, rho_lgd_k: f64) -> Result<Self> {
        let model = Self { k_hat, sigma_k, lgd_hat, sigma_lgd, rho_lgd_k };
        model.validate()?;
        Ok(model)
    }

    /// Parameters known exactly: every draw equals the point estimates.
    pub fn degenerate(k_hat: f64, lgd_hat: f64) -> Self {
        Self { k_hat, sigma_k: 0.0, lgd_hat, sigma_lgd: 0.0, rho_lgd_k: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("k_hat", self.k_hat)?;
        ensure_finite("lgd_hat", self.lgd_hat)?;
        ensure_finite("sigma_k", self.sigma_k)?;
        ensure_finite("sigma_lgd", self.sigma_lgd)?;
        if self.sigma_k < 0.0 {
            return Err(Error::domain("sigma_k", self.sigma_k, "must be non-negative"));
        }
        if self.sigma_lgd < 0.0 {
            return Err(Error::domain("sigma_lgd", self.sigma_lgd, "must be non-negative"));
        }
        if !(-1.0..=1.0).contains(&self.rho_lgd_k) {
            return Err(Error::domain("rho_lgd_k", self.rho_lgd_k, "must lie in [-1, 1]"));
        }
        let [[a, b], [_, d]] = self.covariance();
        // 2x2 PSD: non-negative diagonal and determinant
        debug_assert!(a >= 0.0 && d >= 0.0 && a * d - b * b >= -1e-15 * (a * d).max(1.0));
        Ok(())
    }

    /// Covariance of `(k, LGD)`.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let cross = self.rho_lgd_k * self.sigma_k * self.sigma_lgd;
        [[self.sigma_k * self.sigma_k, cross], [cross, self.sigma_lgd * self.sigma_lgd]]
    }

    /// Lower Cholesky factor of [`covariance`](Self::covariance), written in
    /// closed form so zero variances and `|ρ| = 1` need no pivoting.
    pub fn cholesky(&self) -> [[f64; 2]; 2] {
        let residual = (1.0 - self.rho_lgd_k * self.rho_lgd_k).max(0.0).sqrt();
        [
            [self.sigma_k, 0.0],
            [self.rho_lgd_k * self.sigma_lgd, residual * self.sigma_lgd],
        ]
    }
}

/// How the mean default point is recovered from `PD̂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KHatMethod {
    /// Second-order expansion `Φ(k̂) − σ²/2 · k̂ φ(k̂) = PD̂`.
    Taylor3,
    /// Exact Gaussian expectation by Gauss–Hermite quadrature.
    #[default]
    Quadrature,
}

impl FromStr for KHatMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "taylor3" | "taylor" => Ok(Self::Taylor3),
            "quadrature" | "gh" => Ok(Self::Quadrature),
            other => Err(Error::Config(format!("unknown k-hat method '{other}'"))),
        }
    }
}

/// `E[Φ(k)]` for `k ~ N(k_hat, sigma_k²)`.
pub fn expected_pd(k_hat: f64, sigma_k: f64) -> Result<f64> {
    ensure_finite("k_hat", k_hat)?;
    ensure_finite("sigma_k", sigma_k)?;
    if sigma_k < 0.0 {
        return Err(Error::domain("sigma_k", sigma_k, "must be non-negative"));
    }
    if sigma_k == 0.0 {
        return Ok(norm_cdf(k_hat));
    }
    Ok(gauss_hermite().expectation(|x| norm_cdf(k_hat + sigma_k * x)))
}

fn taylor_pd(k_hat: f64, sigma_k: f64) -> f64 {
    norm_cdf(k_hat) - 0.5 * sigma_k * sigma_k * k_hat * norm_pdf(k_hat)
}

/// Mean default point consistent with `pd_hat` once `k` is spread with
/// standard deviation `sigma_k`.
pub fn infer_k_hat(pd_hat: f64, sigma_k: f64, method: KHatMethod) -> Result<f64> {
    ensure_open_unit("pd_hat", pd_hat)?;
    ensure_finite("sigma_k", sigma_k)?;
    if sigma_k < 0.0 {
        return Err(Error::domain("sigma_k", sigma_k, "must be non-negative"));
    }
    let naive = norm_quantile(pd_hat);
    if sigma_k == 0.0 {
        return Ok(naive);
    }

    let half_width = 5.0 * sigma_k + 1.0;
    let (lo, hi) = (naive - half_width, naive + half_width);
    let root = match method {
        KHatMethod::Taylor3 => find_root(|k| taylor_pd(k, sigma_k) - pd_hat, lo, hi, 1e-12),
        KHatMethod::Quadrature => {
            let rule = gauss_hermite();
            find_root(|k| rule.expectation(|x| norm_cdf(k + sigma_k * x)) - pd_hat, lo, hi, 1e-12)
        }
    };
    root.map_err(|e| match e {
        Error::Bracketing(msg) => {
            Error::Bracketing(format!("pd_hat = {pd_hat} inconsistent with sigma_k = {sigma_k}: {msg}"))
        }
        other => other,
    })
}

/// One draw of the uncertain parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterDraw {
    pub k: f64,
    pub lgd: f64,
}

/// Maximum redraws in clamp mode before falling back to clipping.
const MAX_REDRAWS: usize = 10_000;

/// Correlated Gaussian sampler for `(k, LGD)`.
///
/// Each draw consumes two standard normals `(z1, z2)` and maps them through
/// the Cholesky factor. With `clamp_lgd` the pair is redrawn until LGD lies
/// in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct ParameterSampler {
    model: UncertaintyModel,
    chol: [[f64; 2]; 2],
    clamp_lgd: bool,
}

impl ParameterSampler {
    pub fn new(model: UncertaintyModel, clamp_lgd: bool) -> Result<Self> {
        model.validate()?;
        Ok(Self { chol: model.cholesky(), model, clamp_lgd })
    }

    pub fn model(&self) -> &UncertaintyModel {
        &self.model
    }

    #[inline]
    fn draw_once<R: Rng + ?Sized>(&self, rng: &mut R) -> ParameterDraw {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        ParameterDraw {
            k: self.model.k_hat + self.chol[0][0] * z1,
            lgd: self.model.lgd_hat + self.chol[1][0] * z1 + self.chol[1][1] * z2,
        }
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ParameterDraw {
        let mut draw = self.draw_once(rng);
        if self.clamp_lgd {
            let mut attempts = 0;
            while !(0.0..=1.0).contains(&draw.lgd) && attempts < MAX_REDRAWS {
                draw = self.draw_once(rng);
                attempts += 1;
            }
            draw.lgd = draw.lgd.clamp(0.0, 1.0);
        }
        draw
    }
}

/// `count` correlated `(k, lgd)` pairs drawn from `model`.
pub fn sample_parameters<R: Rng + ?Sized>(model: &UncertaintyModel, rng: &mut R, count: usize) -> Result<Vec<(f64, f64)>> {
    if count == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let sampler = ParameterSampler::new(*model, false)?;
    Ok((0..count)
        .map(|_| {
            let d = sampler.draw(rng);
            (d.k, d.lgd)
        })
        .collect())
}
