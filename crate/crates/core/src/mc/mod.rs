//! Monte Carlo capital under parameter uncertainty.
//!
//! Each path draws `(k, LGD)` from the uncertainty law and an independent
//! common factor `M`, then evaluates the portfolio loss rate. Paths are
//! grouped in fixed-size blocks; block `b` of stream `s` always draws from
//! the same ChaCha8 stream, so results never depend on the thread count.

mod engine;
mod quantile;
mod scenario;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use engine::{
    correct_capital, correct_capital_detailed, loss_histogram, simulate_losses, simulate_losses_with, FactorLaw,
    HistogramBin, LossSummary, ParameterLaw, StandardNormalFactor,
};
pub use quantile::{order_statistic_index, var_quantile};
pub use scenario::{add_on, scenario_addon, scenario_addons, scenario_model, AddOnReport, Scenario};

/// Portfolio granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// Infinitely granular portfolio: loss equals its conditional expectation.
    Asymptotic,
    /// Homogeneous portfolio of `n` obligors: defaults are binomial given `M`.
    Finite(u32),
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("asymptotic") || s.eq_ignore_ascii_case("inf") {
            return Ok(Self::Asymptotic);
        }
        match s.parse::<u32>() {
            Ok(n) if n >= 1 => Ok(Self::Finite(n)),
            _ => Err(Error::Config(format!("obligors must be a positive integer or 'asymptotic', got '{s}'"))),
        }
    }
}

/// Which PD feeds the Basel asset correlation on each path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoMode {
    /// `ρ(Φ(k))` with the drawn default point.
    #[default]
    OfRealizedPd,
    /// `ρ(PD̂)` frozen at the mean PD.
    OfMeanPd,
}

impl FromStr for RhoMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "realized" | "of_realized_pd" => Ok(Self::OfRealizedPd),
            "mean" | "of_mean_pd" => Ok(Self::OfMeanPd),
            other => Err(Error::Config(format!("unknown rho mode '{other}' (expected realized|mean)"))),
        }
    }
}

impl RhoMode {
    pub fn label(self) -> &'static str {
        match self {
            Self::OfRealizedPd => "realized",
            Self::OfMeanPd => "mean",
        }
    }
}

pub const MIN_PATHS: usize = 1000;
pub const DEFAULT_SEED: u64 = 42;
/// Losses kept in memory before the multi-pass selection takes over
/// (8 bytes each).
pub const DEFAULT_MAX_STORED_LOSSES: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_sim: usize,
    pub seed: u64,
    pub alpha: f64,
    pub granularity: Granularity,
    pub lgd_clamp: bool,
    pub rho_mode: RhoMode,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub max_stored_losses: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_sim: 10_000_000,
            seed: DEFAULT_SEED,
            alpha: crate::BASEL_ALPHA,
            granularity: Granularity::Asymptotic,
            lgd_clamp: false,
            rho_mode: RhoMode::OfRealizedPd,
            threads: None,
            max_stored_losses: DEFAULT_MAX_STORED_LOSSES,
        }
    }
}

impl SimulationConfig {
    pub fn with_paths(n_sim: usize) -> Self {
        Self { n_sim, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sim < MIN_PATHS {
            return Err(Error::Config(format!("n_sim must be at least {MIN_PATHS}, got {}", self.n_sim)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if let Granularity::Finite(0) = self.granularity {
            return Err(Error::Config("a finite portfolio needs at least one obligor".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be positive".into()));
        }
        if self.max_stored_losses == 0 {
            return Err(Error::Config("max_stored_losses must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SimulationConfig::default().validate().is_ok());
        assert!(SimulationConfig::with_paths(999).validate().is_err());
        let mut c = SimulationConfig::with_paths(5000);
        c.granularity = Granularity::Finite(0);
        assert!(c.validate().is_err());
        c.granularity = Granularity::Finite(50);
        c.alpha = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn parse_enums() {
        assert_eq!("50".parse::<Granularity>().unwrap(), Granularity::Finite(50));
        assert_eq!("asymptotic".parse::<Granularity>().unwrap(), Granularity::Asymptotic);
        assert!("0".parse::<Granularity>().is_err());
        assert_eq!("mean".parse::<RhoMode>().unwrap(), RhoMode::OfMeanPd);
        assert!("median".parse::<RhoMode>().is_err());
    }
}
