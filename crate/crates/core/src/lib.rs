//! Measurement pipeline for the consumption-based thrift index
//! `theta_c = -Δc* / Δg(K)`.
//!
//! National-accounts panels of market-value capital `K`, consumption `C`
//! and GDP are turned into capital growth rates `g = ΔK/K` and
//! consumption/capital ratios `c* = C/K`. Small denominators are screened
//! out, observations are averaged with GDP weights, and two-way
//! fixed-effects regressions of `-c*` on `g` and `-Δc*` on `Δg` are fitted.
//! Synthetic panels with known `theta_c` validate every estimator.

pub mod derive;
pub mod dgp;
pub mod estimate;
pub mod panel;
pub mod report;
pub mod wid;

pub use derive::{
    consumption_ratio_series, derive_all, derive_points, first_difference, growth_rate_series,
    DerivedPoint, ScreenConfig, ScreenedVariable,
};
pub use estimate::{
    country_summaries, country_theta_summary, fit_panel_regression, pooled_weighted_theta,
    yearly_weighted_theta, CountrySummary, RegressionResult, RegressionSpec, Weighting,
};
pub use panel::{CountryPanel, Observation, PanelError, PanelRow};
