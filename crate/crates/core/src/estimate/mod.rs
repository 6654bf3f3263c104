//! Aggregation of thrift-index observations and weighted fixed-effects
//! regressions.

pub mod aggregate;
pub mod demean;
pub mod regression;
pub mod wls;

use std::fmt;
use std::str::FromStr;

use crate::derive::DerivedPoint;

pub use aggregate::{
    country_summaries, country_theta_summary, pooled_weighted_theta, yearly_weighted_theta,
    AggregateError, CountrySummary, YearlyTheta,
};
pub use demean::{demean, demean_two_way, DemeanError};
pub use regression::{
    fit_panel_regression, fit_within, EstimationError, RegressionResult, RegressionSpec, Regressor,
    Response,
};
pub use wls::{solve_weighted_least_squares, Column, ColumnKind, Design, WlsError, WlsFit};

/// Observation weights for averages and regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Unit weights.
    None,
    /// Same-year GDP.
    #[default]
    Gdp,
}

impl Weighting {
    pub fn weight(self, point: &DerivedPoint) -> f64 {
        match self {
            Weighting::None => 1.0,
            Weighting::Gdp => point.gdp,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Weighting::None => "none",
            Weighting::Gdp => "gdp",
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Weighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gdp" => Ok(Weighting::Gdp),
            "none" => Ok(Weighting::None),
            other => Err(format!(
                "unknown weighting `{other}` (expected gdp or none)"
            )),
        }
    }
}
