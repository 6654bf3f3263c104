//! Averages of screened theta observations: per country, pooled and per
//! calendar year.

use std::collections::BTreeMap;

use thiserror::Error;

use super::Weighting;
use crate::derive::DerivedPoint;

#[derive(Debug, Error, PartialEq)]
pub enum AggregateError {
    #[error("points span several countries ({0} and {1})")]
    MixedCountries(String, String),
    #[error("country {0} has no usable periods")]
    NoUsablePeriods(String),
    #[error("no screened observations with positive weight")]
    NoData,
}

/// Mean theta of one country over its screened years.
#[derive(Debug, Clone, PartialEq)]
pub struct CountrySummary {
    pub country: String,
    pub theta_mean: f64,
    pub n_periods: usize,
    pub first_year: i32,
    pub last_year: i32,
}

impl CountrySummary {
    /// `"YY-YY(n)"` with two-digit years of the first and last observation.
    pub fn period_string(&self) -> String {
        format!(
            "{:02}-{:02}({})",
            self.first_year.rem_euclid(100),
            self.last_year.rem_euclid(100),
            self.n_periods
        )
    }
}

fn screened(points: &[DerivedPoint]) -> impl Iterator<Item = (&DerivedPoint, f64)> {
    points
        .iter()
        .filter(|p| p.passes_screen)
        .filter_map(|p| p.theta_c.map(|t| (p, t)))
}

/// Unweighted mean of the screened theta values of a single country.
pub fn country_theta_summary(points: &[DerivedPoint]) -> Result<CountrySummary, AggregateError> {
    let Some(first) = points.first() else {
        return Err(AggregateError::NoUsablePeriods(String::new()));
    };
    if let Some(other) = points.iter().find(|p| p.country != first.country) {
        return Err(AggregateError::MixedCountries(
            first.country.clone(),
            other.country.clone(),
        ));
    }
    let (mut sum, mut n) = (0.0, 0usize);
    let (mut lo, mut hi) = (i32::MAX, i32::MIN);
    for (p, theta) in screened(points) {
        sum += theta;
        n += 1;
        lo = lo.min(p.year);
        hi = hi.max(p.year);
    }
    if n == 0 {
        return Err(AggregateError::NoUsablePeriods(first.country.clone()));
    }
    Ok(CountrySummary {
        country: first.country.clone(),
        theta_mean: sum / n as f64,
        n_periods: n,
        first_year: lo,
        last_year: hi,
    })
}

/// Summaries for every country with at least one usable period, ordered
/// by country code.
pub fn country_summaries(points: &[DerivedPoint]) -> Vec<CountrySummary> {
    let mut by_country: BTreeMap<&str, Vec<DerivedPoint>> = BTreeMap::new();
    for p in points {
        by_country.entry(&p.country).or_default().push(p.clone());
    }
    by_country
        .values()
        .filter_map(|pts| country_theta_summary(pts).ok())
        .collect()
}

/// `Σ w·θ / Σ w` over all screened country-years.
pub fn pooled_weighted_theta(
    points: &[DerivedPoint],
    weighting: Weighting,
) -> Result<f64, AggregateError> {
    let (mut num, mut den) = (0.0, 0.0);
    for (p, theta) in screened(points) {
        let w = weighting.weight(p);
        if w > 0.0 {
            num += w * theta;
            den += w;
        }
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(AggregateError::NoData)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct YearlyTheta {
    pub year: i32,
    pub weighted_theta: f64,
    pub n_countries: usize,
}

/// Cross-country weighted mean of theta for each year that has at least
/// one screened observation.
pub fn yearly_weighted_theta(points: &[DerivedPoint], weighting: Weighting) -> Vec<YearlyTheta> {
    let mut acc: BTreeMap<i32, (f64, f64, usize)> = BTreeMap::new();
    for (p, theta) in screened(points) {
        let w = weighting.weight(p);
        if w > 0.0 {
            let e = acc.entry(p.year).or_default();
            e.0 += w * theta;
            e.1 += w;
            e.2 += 1;
        }
    }
    acc.into_iter()
        .map(|(year, (num, den, n))| YearlyTheta {
            year,
            weighted_theta: num / den,
            n_countries: n,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(country: &str, year: i32, theta: f64, gdp: f64) -> DerivedPoint {
        DerivedPoint {
            country: country.into(),
            year,
            gdp,
            g: Some(0.1),
            c_star: 0.5,
            delta_g: Some(0.1),
            delta_c_star: Some(-0.1 * theta),
            theta_c: Some(theta),
            passes_screen: true,
        }
    }

    #[test]
    fn two_point_country_mean() {
        let s = country_theta_summary(&[point("AM", 1998, 0.2, 1.0), point("AM", 2005, 0.4, 9.0)])
            .unwrap();
        assert!((s.theta_mean - 0.3).abs() < 1e-15);
        assert_eq!(s.period_string(), "98-05(2)");
    }

    #[test]
    fn period_string_pads_years() {
        let s = country_theta_summary(&[point("X", 2000, 1.0, 1.0)]).unwrap();
        assert_eq!(s.period_string(), "00-00(1)");
        assert_eq!(s.theta_mean, 1.0);
    }

    #[test]
    fn unscreened_points_are_ignored() {
        let mut p = point("X", 2000, 5.0, 1.0);
        p.passes_screen = false;
        assert_eq!(
            country_theta_summary(&[p.clone()]),
            Err(AggregateError::NoUsablePeriods("X".into()))
        );
        assert!(country_summaries(&[p]).is_empty());
    }

    #[test]
    fn mixed_countries_rejected() {
        assert!(matches!(
            country_theta_summary(&[point("A", 2000, 1.0, 1.0), point("B", 2000, 1.0, 1.0)]),
            Err(AggregateError::MixedCountries(..))
        ));
    }

    #[test]
    fn pooled_weighted_mean() {
        let pts = [point("A", 2000, 1.0, 3.0), point("B", 2000, 0.0, 1.0)];
        assert_eq!(pooled_weighted_theta(&pts, Weighting::Gdp).unwrap(), 0.75);
        assert_eq!(pooled_weighted_theta(&pts, Weighting::None).unwrap(), 0.5);
        assert_eq!(
            pooled_weighted_theta(&[], Weighting::Gdp),
            Err(AggregateError::NoData)
        );
    }

    #[test]
    fn yearly_means() {
        let pts = [
            point("A", 2000, -1.0, 2.0),
            point("B", 2000, 1.0, 2.0),
            point("A", 2001, 0.7, 5.0),
        ];
        let y = yearly_weighted_theta(&pts, Weighting::Gdp);
        assert_eq!(y.len(), 2);
        assert_eq!(
            (y[0].year, y[0].weighted_theta, y[0].n_countries),
            (2000, 0.0, 2)
        );
        assert_eq!((y[1].weighted_theta, y[1].n_countries), (0.7, 1));
    }
}
