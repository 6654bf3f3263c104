//! Two-way fixed-effects panel regressions of (differenced) consumption
//! ratios on (differenced) capital growth.
//!
//! The coefficient comes from an explicit dummy-variable fit; the within
//! transformation is used for the within R² and as an independent route to
//! the same coefficient.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use super::demean::{demean, DemeanError};
use super::wls::{solve_weighted_least_squares, Column, ColumnKind, Design, WlsError};
use super::Weighting;
use crate::derive::{sort_points, DerivedPoint, ScreenConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    /// `-c*`
    NegCStar,
    /// `-Δc*`
    NegDeltaCStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regressor {
    /// `g(K)`
    GrowthRate,
    /// `Δg(K)`
    DeltaGrowthRate,
}

impl Response {
    fn value(self, p: &DerivedPoint) -> Option<f64> {
        match self {
            Response::NegCStar => Some(-p.c_star),
            Response::NegDeltaCStar => p.delta_c_star.map(|d| -d),
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Response::NegCStar => "neg_c_star",
            Response::NegDeltaCStar => "neg_delta_c_star",
        }
    }
}

impl Regressor {
    fn value(self, p: &DerivedPoint) -> Option<f64> {
        match self {
            Regressor::GrowthRate => p.g,
            Regressor::DeltaGrowthRate => p.delta_g,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Regressor::GrowthRate => "g",
            Regressor::DeltaGrowthRate => "delta_g",
        }
    }
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Response::NegCStar => "-c*",
            Response::NegDeltaCStar => "-Δc*",
        })
    }
}

impl fmt::Display for Regressor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regressor::GrowthRate => "g(K)",
            Regressor::DeltaGrowthRate => "Δg(K)",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionSpec {
    pub response: Response,
    pub regressor: Regressor,
    pub screen: ScreenConfig,
    pub weights: Weighting,
    pub country_fe: bool,
    pub year_fe: bool,
}

impl RegressionSpec {
    /// `-c*` on `g(K)`, screened on `|g(K)|`, GDP weights, both fixed effects.
    pub fn levels() -> Self {
        Self {
            response: Response::NegCStar,
            regressor: Regressor::GrowthRate,
            screen: ScreenConfig::growth(),
            weights: Weighting::Gdp,
            country_fe: true,
            year_fe: true,
        }
    }

    /// `-Δc*` on `Δg(K)`, screened on `|Δg(K)|`, GDP weights, both fixed effects.
    pub fn differences() -> Self {
        Self {
            response: Response::NegDeltaCStar,
            regressor: Regressor::DeltaGrowthRate,
            screen: ScreenConfig::delta_growth(),
            weights: Weighting::Gdp,
            country_fe: true,
            year_fe: true,
        }
    }

    pub fn with_weights(mut self, weights: Weighting) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_fixed_effects(mut self, country: bool, year: bool) -> Self {
        self.country_fe = country;
        self.year_fe = year;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self, EstimationError> {
        self.screen = self
            .screen
            .with_threshold(threshold)
            .map_err(|e| EstimationError::InvalidSpec(e.to_string()))?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), EstimationError> {
        match (self.response, self.regressor) {
            (Response::NegCStar, Regressor::GrowthRate)
            | (Response::NegDeltaCStar, Regressor::DeltaGrowthRate) => Ok(()),
            (r, x) => Err(EstimationError::InvalidSpec(format!(
                "cannot regress {r} on {x}"
            ))),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EstimationError {
    #[error("invalid regression spec: {0}")]
    InvalidSpec(String),
    #[error("no observations survive the screen")]
    EmptySample,
    #[error("{effect} fixed effects need at least 2 distinct {effect} values, found {found}")]
    TooFewGroups { effect: &'static str, found: usize },
    #[error("regressor has no variation left after removing fixed effects")]
    DegenerateRegressor,
    #[error(transparent)]
    Wls(#[from] WlsError),
    #[error(transparent)]
    Demean(#[from] DemeanError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub spec: RegressionSpec,
    pub coefficient: f64,
    pub se_classical: f64,
    /// CR1 standard error clustered by country.
    pub se_cluster_country: f64,
    pub n_obs: usize,
    pub n_countries: usize,
    pub n_years: usize,
    pub r2: f64,
    pub r2_within: f64,
}

impl RegressionResult {
    /// The reported standard error (country-clustered).
    pub fn std_error(&self) -> f64 {
        self.se_cluster_country
    }

    /// One `key=value` pair per line, values at full precision.
    pub fn to_key_value(&self) -> String {
        let s = &self.spec;
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("response", &s.response.key());
        kv("regressor", &s.regressor.key());
        kv("screen_variable", &screen_key(&s.screen));
        kv("screen_threshold", &Full(s.screen.threshold()));
        kv("weights", &s.weights.key());
        kv("country_fe", &s.country_fe);
        kv("year_fe", &s.year_fe);
        kv("coefficient", &Full(self.coefficient));
        kv("se_classical", &Full(self.se_classical));
        kv("se_cluster_country", &Full(self.se_cluster_country));
        kv("n_obs", &self.n_obs);
        kv("n_countries", &self.n_countries);
        kv("n_years", &self.n_years);
        kv("r2", &Full(self.r2));
        kv("r2_within", &Full(self.r2_within));
        out
    }
}

/// Shortest round-trip rendering that always carries a decimal point.
struct Full(f64);

impl fmt::Display for Full {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

fn screen_key(screen: &ScreenConfig) -> &'static str {
    match screen.variable() {
        crate::derive::ScreenedVariable::GrowthRate => "g",
        crate::derive::ScreenedVariable::DeltaGrowthRate => "delta_g",
    }
}

/// Screened estimation sample, sorted by (country, year), with dense
/// country and year indices (ascending order, index 0 is the baseline).
struct Sample {
    y: Vec<f64>,
    x: Vec<f64>,
    w: Vec<f64>,
    country: Vec<usize>,
    year: Vec<usize>,
    country_names: Vec<String>,
    years: Vec<i32>,
}

impl Sample {
    fn build(spec: &RegressionSpec, points: &[DerivedPoint]) -> Result<Self, EstimationError> {
        spec.validate()?;
        let mut pts: Vec<DerivedPoint> = points
            .iter()
            .filter(|p| spec.screen.passes(p))
            .filter(|p| spec.weights.weight(p) > 0.0)
            .filter(|p| spec.response.value(p).is_some() && spec.regressor.value(p).is_some())
            .cloned()
            .collect();
        if pts.is_empty() {
            return Err(EstimationError::EmptySample);
        }
        sort_points(&mut pts);

        let countries: BTreeMap<&str, usize> = pts
            .iter()
            .map(|p| (p.country.as_str(), 0))
            .collect::<BTreeMap<_, _>>()
            .into_keys()
            .enumerate()
            .map(|(i, c)| (c, i))
            .collect();
        let years: BTreeMap<i32, usize> = pts
            .iter()
            .map(|p| (p.year, 0))
            .collect::<BTreeMap<_, _>>()
            .into_keys()
            .enumerate()
            .map(|(i, y)| (y, i))
            .collect();
        if spec.country_fe && countries.len() < 2 {
            return Err(EstimationError::TooFewGroups {
                effect: "country",
                found: countries.len(),
            });
        }
        if spec.year_fe && years.len() < 2 {
            return Err(EstimationError::TooFewGroups {
                effect: "year",
                found: years.len(),
            });
        }

        Ok(Sample {
            y: pts.iter().filter_map(|p| spec.response.value(p)).collect(),
            x: pts.iter().filter_map(|p| spec.regressor.value(p)).collect(),
            w: pts.iter().map(|p| spec.weights.weight(p)).collect(),
            country: pts.iter().map(|p| countries[p.country.as_str()]).collect(),
            year: pts.iter().map(|p| years[&p.year]).collect(),
            country_names: countries.keys().map(|c| c.to_string()).collect(),
            years: years.keys().copied().collect(),
        })
    }

    fn len(&self) -> usize {
        self.y.len()
    }

    fn design(&self, spec: &RegressionSpec) -> Design {
        let n = self.len();
        let mut cols = vec![
            Column::intercept(n),
            Column::regressor(spec.regressor.key(), self.x.clone()),
        ];
        if spec.country_fe {
            for (idx, name) in self.country_names.iter().enumerate().skip(1) {
                cols.push(dummy(format!("country[{name}]"), &self.country, idx));
            }
        }
        if spec.year_fe {
            for (idx, year) in self.years.iter().enumerate().skip(1) {
                cols.push(dummy(format!("year[{year}]"), &self.year, idx));
            }
        }
        Design::new(cols)
    }

    /// Weighted within transformation over the flagged effects; with no
    /// effects the weighted grand mean is removed instead.
    fn within(&self, spec: &RegressionSpec, values: &[f64]) -> Result<Vec<f64>, DemeanError> {
        let all = vec![0usize; self.len()];
        let mut groups: Vec<&[usize]> = Vec::new();
        if spec.country_fe {
            groups.push(&self.country);
        }
        if spec.year_fe {
            groups.push(&self.year);
        }
        if groups.is_empty() {
            groups.push(&all);
        }
        demean(values, &groups, &self.w)
    }
}

fn dummy(name: String, ids: &[usize], level: usize) -> Column {
    let values = ids
        .iter()
        .map(|&i| if i == level { 1.0 } else { 0.0 })
        .collect();
    Column::new(name, ColumnKind::Dummy, values)
}

fn weighted_r2(ssr: f64, sst: f64) -> f64 {
    if sst > 0.0 {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Fits `spec` on the screened points by weighted least squares with
/// explicit intercept, country and year dummies.
pub fn fit_panel_regression(
    spec: &RegressionSpec,
    points: &[DerivedPoint],
) -> Result<RegressionResult, EstimationError> {
    let sample = Sample::build(spec, points)?;
    let design = sample.design(spec);
    let fit = solve_weighted_least_squares(&design, &sample.y, &sample.w)?;
    let j = 1;
    let coefficient = fit
        .coefficient(j)
        .expect("regressor column is never dropped");
    let n = fit.n_obs;
    let k = fit.rank;
    let w = &sample.w;

    let ssr: f64 = fit.residuals.iter().zip(w).map(|(e, w)| w * e * e).sum();
    let wsum: f64 = w.iter().sum();
    let ybar = sample.y.iter().zip(w).map(|(y, w)| w * y).sum::<f64>() / wsum;
    let sst: f64 = sample
        .y
        .iter()
        .zip(w)
        .map(|(y, w)| w * (y - ybar).powi(2))
        .sum();

    let a = fit
        .inverse_gram_column(j)
        .expect("regressor column is retained");
    let se_classical = if n > k {
        (ssr / (n - k) as f64 * a[j]).sqrt()
    } else {
        f64::NAN
    };

    // CR1: (G/(G-1)) (N-1)/(N-K) Σ_g (a' Σ_{i∈g} x_i w_i e_i)^2
    let n_countries = sample.country_names.len();
    let mut scores = vec![0.0; n_countries];
    for i in 0..sample.len() {
        let xa: f64 = design
            .columns
            .iter()
            .zip(&a)
            .map(|(c, a)| c.values[i] * a)
            .sum();
        scores[sample.country[i]] += xa * w[i] * fit.residuals[i];
    }
    let se_cluster_country = if n_countries > 1 && n > k {
        let g = n_countries as f64;
        let dof = g / (g - 1.0) * (n as f64 - 1.0) / (n - k) as f64;
        (dof * scores.iter().map(|s| s * s).sum::<f64>()).sqrt()
    } else {
        f64::NAN
    };

    let y_within = sample.within(spec, &sample.y)?;
    let x_within = sample.within(spec, &sample.x)?;
    let b_within = within_slope(&x_within, &y_within, w)?;
    let ssr_within: f64 = y_within
        .iter()
        .zip(&x_within)
        .zip(w)
        .map(|((y, x), w)| w * (y - b_within * x).powi(2))
        .sum();
    let sst_within: f64 = y_within.iter().zip(w).map(|(y, w)| w * y * y).sum();

    Ok(RegressionResult {
        spec: *spec,
        coefficient,
        se_classical,
        se_cluster_country,
        n_obs: n,
        n_countries,
        n_years: sample.years.len(),
        r2: weighted_r2(ssr, sst),
        r2_within: weighted_r2(ssr_within, sst_within),
    })
}

fn within_slope(x: &[f64], y: &[f64], w: &[f64]) -> Result<f64, EstimationError> {
    let sxx: f64 = x.iter().zip(w).map(|(x, w)| w * x * x).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((x, y), w)| w * x * y).sum();
    if sxx <= 0.0 {
        return Err(EstimationError::DegenerateRegressor);
    }
    Ok(sxy / sxx)
}

/// The same coefficient as [`fit_panel_regression`], obtained by weighted
/// demeaning of response and regressor followed by a no-intercept slope.
pub fn fit_within(spec: &RegressionSpec, points: &[DerivedPoint]) -> Result<f64, EstimationError> {
    let sample = Sample::build(spec, points)?;
    let y = sample.within(spec, &sample.y)?;
    let x = sample.within(spec, &sample.x)?;
    within_slope(&x, &y, &sample.w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(country: &str, year: i32, x: f64, y: f64) -> DerivedPoint {
        DerivedPoint {
            country: country.into(),
            year,
            gdp: 1.0,
            g: Some(x),
            c_star: -y,
            delta_g: None,
            delta_c_star: None,
            theta_c: None,
            passes_screen: false,
        }
    }

    fn unscreened() -> RegressionSpec {
        RegressionSpec::levels()
            .with_threshold(0.0)
            .unwrap()
            .with_weights(Weighting::None)
    }

    #[test]
    fn country_fe_hand_solution() {
        let pts = [
            obs("A", 2000, 0.0, 0.0),
            obs("A", 2001, 1.0, 1.0),
            obs("B", 2000, 0.0, 5.0),
            obs("B", 2001, 1.0, 6.0),
        ];
        let spec = unscreened().with_fixed_effects(true, false);
        let r = fit_panel_regression(&spec, &pts).unwrap();
        assert!((r.coefficient - 1.0).abs() < 1e-12);
        assert_eq!(r.n_obs, 4);
        assert!((fit_within(&spec, &pts).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_pairing_rejected() {
        let mut spec = RegressionSpec::levels();
        spec.regressor = Regressor::DeltaGrowthRate;
        assert!(matches!(
            fit_panel_regression(&spec, &[]),
            Err(EstimationError::InvalidSpec(_))
        ));
    }

    #[test]
    fn too_few_countries() {
        let pts = [obs("A", 2000, 0.1, 0.0), obs("A", 2001, 0.2, 1.0)];
        let err = fit_panel_regression(&unscreened(), &pts).unwrap_err();
        assert_eq!(
            err,
            EstimationError::TooFewGroups {
                effect: "country",
                found: 1
            }
        );
    }

    #[test]
    fn empty_sample() {
        assert_eq!(
            fit_panel_regression(&RegressionSpec::levels(), &[obs("A", 2000, 0.0, 1.0)]),
            Err(EstimationError::EmptySample)
        );
    }

    #[test]
    fn key_value_lines() {
        let pts = [
            obs("A", 2000, 0.0, 0.0),
            obs("A", 2001, 1.0, 1.0),
            obs("B", 2000, 0.0, 5.0),
            obs("B", 2001, 1.5, 6.0),
            obs("B", 2002, 2.0, 8.0),
        ];
        let r = fit_panel_regression(&unscreened().with_fixed_effects(true, false), &pts).unwrap();
        let text = r.to_key_value();
        assert!(text.starts_with("response=neg_c_star\nregressor=g\n"));
        assert!(text.contains("\nn_obs=5\n"));
        assert!(text.lines().all(|l| l.split_once('=').is_some()));
    }
}
