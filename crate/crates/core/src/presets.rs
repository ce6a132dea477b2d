//! Reference parameter sets for the Moody's 1983–2019 sample: senior
//! unsecured bond LGD with all-rated (AR) and speculative-grade (SG) annual
//! default rates.

use serde::Serialize;

use crate::asrf::PointEstimates;
use crate::data_io::Grade;
use crate::uncertainty::UncertaintyModel;

/// Moments of one rating universe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParameterSet {
    pub grade: Grade,
    pub pd_hat: f64,
    pub lgd_hat: f64,
    pub sigma_lgd: f64,
    pub k_hat: f64,
    pub sigma_k: f64,
    pub rho_lgd_k: f64,
}

impl ParameterSet {
    pub fn point_estimates(&self) -> PointEstimates {
        PointEstimates { pd_hat: self.pd_hat, lgd_hat: self.lgd_hat }
    }

    pub fn model(&self) -> UncertaintyModel {
        UncertaintyModel {
            k_hat: self.k_hat,
            sigma_k: self.sigma_k,
            lgd_hat: self.lgd_hat,
            sigma_lgd: self.sigma_lgd,
            rho_lgd_k: self.rho_lgd_k,
        }
    }

    pub fn for_grade(grade: Grade) -> Self {
        match grade {
            Grade::AllRatings => ALL_RATINGS,
            Grade::Speculative => SPECULATIVE,
        }
    }
}

pub const ALL_RATINGS: ParameterSet = ParameterSet {
    grade: Grade::AllRatings,
    pd_hat: 0.0159,
    lgd_hat: 0.5526,
    sigma_lgd: 0.1025,
    k_hat: -2.208,
    sigma_k: 0.237,
    rho_lgd_k: 0.717,
};

pub const SPECULATIVE: ParameterSet = ParameterSet {
    grade: Grade::Speculative,
    pd_hat: 0.0430,
    lgd_hat: 0.5526,
    sigma_lgd: 0.1025,
    k_hat: -1.778,
    sigma_k: 0.268,
    rho_lgd_k: 0.599,
};

/// Reference summary of the annual LGD series.
pub mod lgd_summary {
    pub const MIN: f64 = 0.3625;
    pub const MAX: f64 = 0.7881;
    pub const MEAN: f64 = 0.5526;
    pub const MEDIAN: f64 = 0.5476;
    pub const STD: f64 = 0.1025;
}

pub const SAMPLE_YEARS: usize = 37;
pub const FIRST_YEAR: i32 = 1983;
