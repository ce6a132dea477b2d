//! Capital add-on over the naïve requirement, and its split by source of
//! parameter uncertainty.

use serde::{Deserialize, Serialize};

use super::engine::simulate_gaussian;
use super::SimulationConfig;
use crate::asrf::{naive_capital, CapitalResult, PointEstimates};
use crate::error::{Error, Result};
use crate::numeric::norm_quantile;
use crate::uncertainty::UncertaintyModel;

/// Which parameters carry estimation noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// LGD uncertain, default point fixed.
    LgdOnly,
    /// Default point uncertain, LGD fixed.
    KOnly,
    /// Both uncertain, drawn independently.
    Independent,
    /// Both uncertain with the estimated LGD–k correlation.
    Correlated,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::LgdOnly, Scenario::KOnly, Scenario::Independent, Scenario::Correlated];

    /// Random stream tag. The full model uses stream 0 so that it matches a
    /// plain capital run with the same seed.
    pub fn stream(self) -> u64 {
        match self {
            Scenario::Correlated => 0,
            Scenario::LgdOnly => 1,
            Scenario::KOnly => 2,
            Scenario::Independent => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scenario::LgdOnly => "LGD (only)",
            Scenario::KOnly => "k (only)",
            Scenario::Independent => "LGD, k (independent)",
            Scenario::Correlated => "LGD, k (correlated)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AddOnReport {
    pub scenario: Option<Scenario>,
    pub alpha: f64,
    pub rc_naive: f64,
    pub rc_correct: f64,
    pub el_naive: f64,
    pub el_correct: f64,
    /// `((RC − RC_naive) + (E[L] − EL_naive)) / RC_naive`.
    pub add_on: f64,
    /// `E[L] − EL_naive`.
    pub excess_el: f64,
    /// Monte Carlo standard error of `add_on`, when known.
    pub add_on_std_error: Option<f64>,
}

/// Relative capital increase of `correct` over `naive`, expected-loss
/// correction included.
pub fn add_on(correct: &CapitalResult, naive: &CapitalResult) -> Result<AddOnReport> {
    if !(naive.rc.is_finite() && naive.rc > 0.0) {
        return Err(Error::domain("rc_naive", naive.rc, "add-on needs a positive naive capital"));
    }
    let excess_el = correct.expected_loss - naive.expected_loss;
    Ok(AddOnReport {
        scenario: None,
        alpha: correct.alpha,
        rc_naive: naive.rc,
        rc_correct: correct.rc,
        el_naive: naive.expected_loss,
        el_correct: correct.expected_loss,
        add_on: ((correct.rc - naive.rc) + excess_el) / naive.rc,
        excess_el,
        add_on_std_error: None,
    })
}

/// The uncertainty model restricted to `scenario`.
///
/// Switching off default-point noise re-derives the mean default point:
/// with `σ_k = 0` it is `Φ⁻¹(PD̂)`, not the shifted `k̂` of the full model.
pub fn scenario_model(model: &UncertaintyModel, pe: &PointEstimates, scenario: Scenario) -> UncertaintyModel {
    match scenario {
        Scenario::LgdOnly => UncertaintyModel {
            k_hat: norm_quantile(pe.pd_hat),
            sigma_k: 0.0,
            rho_lgd_k: 0.0,
            ..*model
        },
        Scenario::KOnly => UncertaintyModel { sigma_lgd: 0.0, rho_lgd_k: 0.0, ..*model },
        Scenario::Independent => UncertaintyModel { rho_lgd_k: 0.0, ..*model },
        Scenario::Correlated => *model,
    }
}

/// Add-on of one scenario, simulated on the scenario's own stream.
pub fn scenario_addon(
    model: &UncertaintyModel,
    pe: &PointEstimates,
    config: &SimulationConfig,
    scenario: Scenario,
) -> Result<AddOnReport> {
    model.validate()?;
    let naive = naive_capital(pe, config.alpha)?;
    let summary = simulate_gaussian(&scenario_model(model, pe, scenario), config, scenario.stream())?;
    let mut report = add_on(&summary.capital(), &naive)?;
    report.scenario = Some(scenario);
    report.add_on_std_error = Some(summary.quantile_std_error() / naive.rc);
    Ok(report)
}

/// Add-ons for the four scenarios against the same naïve baseline, in the
/// order of [`Scenario::ALL`].
pub fn scenario_addons(model: &UncertaintyModel, pe: &PointEstimates, config: &SimulationConfig) -> Result<[AddOnReport; 4]> {
    let mut reports = Scenario::ALL.map(|_| None);
    for (slot, scenario) in reports.iter_mut().zip(Scenario::ALL) {
        *slot = Some(scenario_addon(model, pe, config, scenario)?);
    }
    Ok(reports.map(|r| r.expect("filled above")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_results_give_zero_add_on() {
        let naive = CapitalResult::new(0.1, 0.01, 0.999);
        let report = add_on(&naive, &naive).unwrap();
        assert_eq!(report.add_on, 0.0);
        assert_eq!(report.excess_el, 0.0);
    }

    #[test]
    fn add_on_identity() {
        let naive = CapitalResult::new(0.0954, 0.0088, 0.999);
        let correct = CapitalResult::new(0.1287, 0.0094, 0.999);
        let r = add_on(&correct, &naive).unwrap();
        let expected = ((r.rc_correct - r.rc_naive) + (r.el_correct - r.el_naive)) / r.rc_naive;
        assert_eq!(r.add_on, expected);
        // the numerator collapses to the VaR difference
        assert!((r.add_on - (0.1287 - 0.0954) / naive.rc).abs() < 1e-12);
    }

    #[test]
    fn zero_naive_capital_is_rejected() {
        let naive = CapitalResult::new(0.01, 0.01, 0.999);
        assert!(add_on(&CapitalResult::new(0.1, 0.01, 0.999), &naive).is_err());
    }

    #[test]
    fn scenario_models() {
        let model = UncertaintyModel::new(-2.208, 0.237, 0.5526, 0.1025, 0.717).unwrap();
        let pe = PointEstimates::new(0.0159, 0.5526).unwrap();
        let lgd_only = scenario_model(&model, &pe, Scenario::LgdOnly);
        assert_eq!(lgd_only.sigma_k, 0.0);
        assert_eq!(lgd_only.k_hat, norm_quantile(0.0159));
        assert_eq!(lgd_only.sigma_lgd, 0.1025);
        let k_only = scenario_model(&model, &pe, Scenario::KOnly);
        assert_eq!((k_only.sigma_lgd, k_only.k_hat), (0.0, -2.208));
        assert_eq!(scenario_model(&model, &pe, Scenario::Independent).rho_lgd_k, 0.0);
        assert_eq!(scenario_model(&model, &pe, Scenario::Correlated), model);
    }

    #[test]
    fn zero_sigma_scenarios_have_small_add_ons() {
        let pe = PointEstimates::new(0.0159, 0.5526).unwrap();
        let model = UncertaintyModel::degenerate(norm_quantile(0.0159), 0.5526);
        let reports = scenario_addons(&model, &pe, &SimulationConfig::with_paths(200_000)).unwrap();
        for r in &reports {
            let se = r.add_on_std_error.unwrap();
            assert!(r.add_on.abs() <= 4.0 * se, "{:?}", r);
        }
    }
}
