//! Capital growth, consumption/capital ratios, their first differences and
//! the thrift index `theta_c = -Δc* / Δg`.
//!
//! Differences are only taken between consecutive calendar years. A gap in
//! a panel truncates every chain that would span it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::panel::CountryPanel;

/// Default absolute threshold on the screened variable.
pub const DEFAULT_THRESHOLD: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
#[error("screen threshold must be finite and nonnegative, got {0}")]
pub struct InvalidThreshold(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScreenedVariable {
    /// `|g|`
    GrowthRate,
    /// `|Δg|`; a point must also carry a theta value.
    DeltaGrowthRate,
}

impl fmt::Display for ScreenedVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScreenedVariable::GrowthRate => f.write_str("|g(K)|"),
            ScreenedVariable::DeltaGrowthRate => f.write_str("|Δg(K)|"),
        }
    }
}

/// Small-denominator screen: keep a point when the absolute value of the
/// screened variable reaches `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenConfig {
    variable: ScreenedVariable,
    threshold: f64,
}

impl ScreenConfig {
    pub fn new(variable: ScreenedVariable, threshold: f64) -> Result<Self, InvalidThreshold> {
        if !threshold.is_finite() || threshold < 0.0 {
            return Err(InvalidThreshold(threshold));
        }
        Ok(Self {
            variable,
            threshold,
        })
    }

    /// `|g| >= 0.01`
    pub fn growth() -> Self {
        Self {
            variable: ScreenedVariable::GrowthRate,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    /// `|Δg| >= 0.01`
    pub fn delta_growth() -> Self {
        Self {
            variable: ScreenedVariable::DeltaGrowthRate,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn variable(&self) -> ScreenedVariable {
        self.variable
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn with_threshold(self, threshold: f64) -> Result<Self, InvalidThreshold> {
        Self::new(self.variable, threshold)
    }

    /// Evaluates the screen against a point's own quantities, ignoring
    /// whatever screen the point was derived with.
    pub fn passes(&self, point: &DerivedPoint) -> bool {
        let value = match self.variable {
            ScreenedVariable::GrowthRate => point.g,
            ScreenedVariable::DeltaGrowthRate => point.theta_c.and(point.delta_g),
        };
        value.is_some_and(|v| v.abs() >= self.threshold)
    }
}

impl Default for ScreenConfig {
    fn default() -> Self {
        Self::delta_growth()
    }
}

impl fmt::Display for ScreenConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} >= {}", self.variable, self.threshold)
    }
}

impl FromStr for ScreenedVariable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "g" | "growth" => Ok(Self::GrowthRate),
            "delta_g" | "delta-growth" => Ok(Self::DeltaGrowthRate),
            other => Err(format!("unknown screened variable `{other}`")),
        }
    }
}

/// Derived quantities for one country-year.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedPoint {
    pub country: String,
    pub year: i32,
    /// Same-year GDP, used only as a weight.
    pub gdp: f64,
    pub g: Option<f64>,
    pub c_star: f64,
    pub delta_g: Option<f64>,
    pub delta_c_star: Option<f64>,
    pub theta_c: Option<f64>,
    pub passes_screen: bool,
}

/// `g_t = (K_t - K_{t-1}) / K_{t-1}` for every year whose previous calendar
/// year is in the panel.
pub fn growth_rate_series(panel: &CountryPanel) -> Vec<(i32, f64)> {
    panel
        .observations()
        .windows(2)
        .filter(|w| w[1].year - w[0].year == 1)
        .map(|w| (w[1].year, (w[1].capital - w[0].capital) / w[0].capital))
        .collect()
}

/// `c*_t = C_t / K_t` for every year in the panel.
pub fn consumption_ratio_series(panel: &CountryPanel) -> Vec<(i32, f64)> {
    panel
        .observations()
        .iter()
        .map(|o| (o.year, o.consumption / o.capital))
        .collect()
}

/// Year-on-year change of a year-sorted series; gaps yield no delta.
pub fn first_difference(series: &[(i32, f64)]) -> Vec<(i32, f64)> {
    series
        .windows(2)
        .filter(|w| w[1].0 - w[0].0 == 1)
        .map(|w| (w[1].0, w[1].1 - w[0].1))
        .collect()
}

/// Computes every derived quantity for each year of `panel` and flags the
/// points that pass `screen`.
pub fn derive_points(panel: &CountryPanel, screen: &ScreenConfig) -> Vec<DerivedPoint> {
    let g = growth_rate_series(panel);
    let c_star = consumption_ratio_series(panel);
    let delta_g: BTreeMap<i32, f64> = first_difference(&g).into_iter().collect();
    let delta_c: BTreeMap<i32, f64> = first_difference(&c_star).into_iter().collect();
    let g: BTreeMap<i32, f64> = g.into_iter().collect();

    panel
        .observations()
        .iter()
        .zip(c_star)
        .map(|(obs, (year, c_star))| {
            let dg = delta_g.get(&year).copied();
            let dc = delta_c.get(&year).copied();
            let theta_c = match (dg, dc) {
                (Some(dg), Some(dc)) if dg != 0.0 => Some(-dc / dg),
                _ => None,
            };
            let mut point = DerivedPoint {
                country: panel.country().to_owned(),
                year,
                gdp: obs.gdp,
                g: g.get(&year).copied(),
                c_star,
                delta_g: dg,
                delta_c_star: dc,
                theta_c,
                passes_screen: false,
            };
            point.passes_screen = screen.passes(&point);
            point
        })
        .collect()
}

/// Derives every panel and returns the points sorted by (country, year).
pub fn derive_all(panels: &[CountryPanel], screen: &ScreenConfig) -> Vec<DerivedPoint> {
    let mut points: Vec<DerivedPoint> = panels
        .iter()
        .flat_map(|p| derive_points(p, screen))
        .collect();
    sort_points(&mut points);
    points
}

pub(crate) fn sort_points(points: &mut [DerivedPoint]) {
    points.sort_by(|a, b| a.country.cmp(&b.country).then(a.year.cmp(&b.year)));
}
