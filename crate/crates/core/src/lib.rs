//! Model risk in IRB credit capital.
//!
//! The crate covers three layers:
//!
//! * [`asrf`]: closed-form asymptotic single risk factor mathematics (Basel
//!   correlation, conditional expected loss, naïve capital).
//! * [`uncertainty`] and [`mc`]: a bivariate Gaussian law over the default
//!   point and LGD, and the Monte Carlo engine that turns it into a capital
//!   requirement and an add-on over the naïve figure.
//! * [`stats`] and [`data_io`]: the statistical checks run on annual rate
//!   series before trusting the Gaussian assumption, plus CSV/config IO.

pub mod asrf;
pub mod data_io;
pub mod error;
pub mod mc;
pub mod numeric;
pub mod presets;
pub mod stats;
pub mod uncertainty;

pub use asrf::{basel_correlation, conditional_expected_loss, naive_capital, CapitalResult, PointEstimates};
pub use error::{Error, Result};
pub use mc::{
    add_on, correct_capital, scenario_addon, scenario_addons, simulate_losses, var_quantile, AddOnReport, Granularity,
    LossSummary, RhoMode, Scenario, SimulationConfig,
};
pub use uncertainty::{expected_pd, infer_k_hat, sample_parameters, KHatMethod, UncertaintyModel};

/// Basel confidence level for credit risk.
pub const BASEL_ALPHA: f64 = 0.999;
