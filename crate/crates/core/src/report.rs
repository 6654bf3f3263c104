//! Text tables, the yearly theta series and machine-readable result files.
//!
//! Everything here is a pure function of its inputs: fixed ordering,
//! fixed decimal formatting and no timestamps, so identical inputs give
//! byte-identical files.

use std::fmt::Write as _;

use thiserror::Error;

use crate::derive::{derive_all, DerivedPoint, ScreenConfig};
use crate::estimate::{
    country_summaries, fit_panel_regression, pooled_weighted_theta, yearly_weighted_theta,
    AggregateError, CountrySummary, EstimationError, RegressionResult, RegressionSpec, Weighting,
    YearlyTheta,
};
use crate::panel::CountryPanel;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{what}: {source}")]
    Regression {
        what: &'static str,
        source: EstimationError,
    },
    #[error("pooled theta: {0}")]
    Pooled(#[from] AggregateError),
    #[error("invalid screen threshold {0}")]
    Threshold(f64),
}

/// `x` with `decimals` places. Binary ties round half to even; `-0.00`
/// keeps its sign.
pub fn fixed(x: f64, decimals: usize) -> String {
    format!("{x:.decimals$}")
}

const NAMES: &[(&str, &str)] = &[
    ("AM", "Armenia"),
    ("AT", "Austria"),
    ("AU", "Australia"),
    ("AW", "Aruba"),
    ("AZ", "Azerbaijan"),
    ("BE", "Belgium"),
    ("BF", "Burkina Faso"),
    ("BG", "Bulgaria"),
    ("BH", "Bahrain"),
    ("BO", "Bolivia"),
    ("BR", "Brazil"),
    ("BW", "Botswana"),
    ("CA", "Canada"),
    ("CH", "Switzerland"),
    ("CI", "Côte d’Ivoire"),
    ("CL", "Chile"),
    ("CM", "Cameroon"),
    ("CN", "China"),
    ("CO", "Colombia"),
    ("CR", "Costa Rica"),
    ("CV", "Cape Verde"),
    ("CW", "Curaçao"),
    ("CY", "Cyprus"),
    ("CZ", "Czechia"),
    ("DE", "Germany"),
    ("DK", "Denmark"),
    ("DO", "Dominican Republic"),
    ("EC", "Ecuador"),
    ("EE", "Estonia"),
    ("EG", "Egypt"),
    ("ES", "Spain"),
    ("FI", "Finland"),
    ("FR", "France"),
    ("GB", "United Kingdom"),
    ("GN", "Guinea"),
    ("GR", "Greece"),
    ("GT", "Guatemala"),
    ("HK", "Hong Kong"),
    ("HN", "Honduras"),
    ("HR", "Croatia"),
    ("HU", "Hungary"),
    ("ID", "Indonesia"),
    ("IE", "Ireland"),
    ("IL", "Israel"),
    ("IN", "India"),
    ("IR", "Iran"),
    ("IS", "Iceland"),
    ("IT", "Italy"),
    ("JP", "Japan"),
    ("KG", "Kyrgyzstan"),
    ("KR", "South Korea"),
    ("KW", "Kuwait"),
    ("KZ", "Kazakhstan"),
    ("LT", "Lithuania"),
    ("LU", "Luxembourg"),
    ("LV", "Latvia"),
    ("MA", "Morocco"),
    ("MD", "Moldova"),
    ("MN", "Mongolia"),
    ("MT", "Malta"),
    ("MU", "Mauritius"),
    ("MX", "Mexico"),
    ("MY", "Malaysia"),
    ("NE", "Niger"),
    ("NI", "Nicaragua"),
    ("NL", "Netherlands"),
    ("NO", "Norway"),
    ("NZ", "New Zealand"),
    ("PE", "Peru"),
    ("PH", "Philippines"),
    ("PL", "Poland"),
    ("PT", "Portugal"),
    ("QA", "Qatar"),
    ("RO", "Romania"),
    ("RS", "Serbia"),
    ("RU", "Russia"),
    ("SE", "Sweden"),
    ("SI", "Slovenia"),
    ("SK", "Slovakia"),
    ("SN", "Senegal"),
    ("SV", "El Salvador"),
    ("TN", "Tunisia"),
    ("TR", "Turkey"),
    ("UA", "Ukraine"),
    ("US", "USA"),
    ("UZ", "Uzbekistan"),
    ("VE", "Venezuela"),
    ("VG", "British Virgin Islands"),
    ("VU", "Vanuatu"),
    ("ZA", "South Africa"),
];

/// Display name for a country code; unknown codes are returned as is.
pub fn country_name(code: &str) -> &str {
    NAMES
        .binary_search_by(|(c, _)| c.cmp(&code))
        .map(|i| NAMES[i].1)
        .unwrap_or(code)
}

/// Derived points in `country,year,g,c_star,delta_g,delta_c_star,theta_c,passes_screen`
/// layout; absent values are empty fields.
pub fn derived_points_csv(points: &[DerivedPoint]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    let mut out =
        String::from("country,year,g,c_star,delta_g,delta_c_star,theta_c,passes_screen\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{:?},{},{},{},{}",
            p.country,
            p.year,
            opt(p.g),
            p.c_star,
            opt(p.delta_g),
            opt(p.delta_c_star),
            opt(p.theta_c),
            p.passes_screen
        );
    }
    out
}

fn screen_label(screen: &ScreenConfig) -> String {
    format!("{} >= {}", screen.variable(), screen.threshold())
}

/// Side-by-side regression table with three-decimal statistics.
pub fn table1(levels: &RegressionResult, differences: &RegressionResult) -> String {
    let weighting = match levels.spec.weights {
        Weighting::Gdp => "GDP-weighted",
        Weighting::None => "unweighted",
    };
    let yes = |b: bool| if b { "Yes" } else { "No" }.to_string();
    let head = |r: &RegressionResult| format!("{} on {}", r.spec.response, r.spec.regressor);
    let rows: Vec<(&str, String, String)> = vec![
        ("", head(levels), head(differences)),
        (
            "Regression",
            fixed(levels.coefficient, 3),
            fixed(differences.coefficient, 3),
        ),
        (
            "Std. error",
            fixed(levels.std_error(), 3),
            fixed(differences.std_error(), 3),
        ),
        (
            "Observations",
            levels.n_obs.to_string(),
            differences.n_obs.to_string(),
        ),
        ("R²", fixed(levels.r2, 3), fixed(differences.r2, 3)),
        (
            "Within R²",
            fixed(levels.r2_within, 3),
            fixed(differences.r2_within, 3),
        ),
        (
            "Screen",
            screen_label(&levels.spec.screen),
            screen_label(&differences.spec.screen),
        ),
        (
            "Year fixed effects",
            yes(levels.spec.year_fe),
            yes(differences.spec.year_fe),
        ),
        (
            "Country fixed effects",
            yes(levels.spec.country_fe),
            yes(differences.spec.country_fe),
        ),
    ];
    let mut out = format!("Regressions, all countries and years, {weighting}.\n\n");
    for (label, a, b) in rows {
        let _ = writeln!(out, "{label:<22}{a:>18}{b:>18}");
    }
    out
}

/// Per-country theta (two decimals) and period strings, sorted by
/// display name.
pub fn table2(summaries: &[CountrySummary], screen: &ScreenConfig) -> String {
    let mut rows: Vec<(&str, &CountrySummary)> = summaries
        .iter()
        .map(|s| (country_name(&s.country), s))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(b.0).then(a.1.country.cmp(&b.1.country)));
    let mut out = format!(
        "θ_c by country. Screen: {}. Number of periods in ().\n\n{:<28}{:>8}  {}\n",
        screen_label(screen),
        "Country",
        "θ_c",
        "Periods"
    );
    for (name, s) in rows {
        let _ = writeln!(
            out,
            "{name:<28}{:>8}  {}",
            fixed(s.theta_mean, 2),
            s.period_string()
        );
    }
    out
}

/// Full-precision per-country summaries.
pub fn countries_csv(summaries: &[CountrySummary]) -> String {
    let mut out = String::from("country,name,theta_mean,n_periods,first_year,last_year,periods\n");
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{},{:?},{},{},{},{}",
            s.country,
            country_name(&s.country).replace(',', " "),
            s.theta_mean,
            s.n_periods,
            s.first_year,
            s.last_year,
            s.period_string()
        );
    }
    out
}

pub fn figure1_csv(series: &[YearlyTheta]) -> String {
    let mut out = String::from("year,weighted_theta,n_countries\n");
    for y in series {
        let _ = writeln!(out, "{},{:?},{}", y.year, y.weighted_theta, y.n_countries);
    }
    out
}

/// Line plot of the yearly series with a reference line at theta = 1.
pub fn figure1_svg(series: &[YearlyTheta]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 48.0;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    if series.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let x0 = series[0].year as f64;
    let x1 = (series[series.len() - 1].year as f64).max(x0 + 1.0);
    let (mut y0, mut y1) = (0.0f64, 1.0f64);
    for p in series {
        y0 = y0.min(p.weighted_theta);
        y1 = y1.max(p.weighted_theta);
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let _ = writeln!(
        out,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>",
        sx(x0),
        sy(1.0),
        sx(x1),
        sy(1.0)
    );
    let _ = writeln!(
        out,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#ccc\"/>",
        sx(x0),
        sy(0.0),
        sx(x1),
        sy(0.0)
    );
    let points: Vec<String> = series
        .iter()
        .map(|p| format!("{:.2},{:.2}", sx(p.year as f64), sy(p.weighted_theta)))
        .collect();
    let _ = writeln!(
        out,
        "<polyline fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"2\" points=\"{}\"/>",
        points.join(" ")
    );
    let label = |x: f64, y: f64, anchor: &str, text: &str| {
        format!("<text x=\"{x:.2}\" y=\"{y:.2}\" font-size=\"12\" text-anchor=\"{anchor}\">{text}</text>\n")
    };
    out.push_str(&label(
        sx(x0),
        H - PAD + 16.0,
        "start",
        &series[0].year.to_string(),
    ));
    out.push_str(&label(
        sx(x1),
        H - PAD + 16.0,
        "end",
        &series[series.len() - 1].year.to_string(),
    ));
    out.push_str(&label(PAD - 6.0, sy(1.0) + 4.0, "end", "1"));
    out.push_str(&label(PAD - 6.0, sy(0.0) + 4.0, "end", "0"));
    out.push_str(&label(W / 2.0, 20.0, "middle", "GDP-weighted θ_c by year"));
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportConfig {
    pub threshold: f64,
    pub weighting: Weighting,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            threshold: crate::derive::DEFAULT_THRESHOLD,
            weighting: Weighting::Gdp,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub points: Vec<DerivedPoint>,
    pub levels: RegressionResult,
    pub differences: RegressionResult,
    pub pooled_theta: f64,
    pub summaries: Vec<CountrySummary>,
    pub yearly: Vec<YearlyTheta>,
    pub screen: ScreenConfig,
}

/// Runs the full estimation on `panels`: both regressions, per-country
/// and pooled theta, and the yearly series.
pub fn build_report(panels: &[CountryPanel], config: &ReportConfig) -> Result<Report, ReportError> {
    let screen = ScreenConfig::delta_growth()
        .with_threshold(config.threshold)
        .map_err(|_| ReportError::Threshold(config.threshold))?;
    let points = derive_all(panels, &screen);
    let spec = |base: RegressionSpec| -> Result<RegressionSpec, ReportError> {
        base.with_weights(config.weighting)
            .with_threshold(config.threshold)
            .map_err(|_| ReportError::Threshold(config.threshold))
    };
    let levels =
        fit_panel_regression(&spec(RegressionSpec::levels())?, &points).map_err(|source| {
            ReportError::Regression {
                what: "-c* on g(K)",
                source,
            }
        })?;
    let differences = fit_panel_regression(&spec(RegressionSpec::differences())?, &points)
        .map_err(|source| ReportError::Regression {
            what: "-Δc* on Δg(K)",
            source,
        })?;
    let pooled_theta = pooled_weighted_theta(&points, config.weighting)?;
    let summaries = country_summaries(&points);
    let yearly = yearly_weighted_theta(&points, config.weighting);
    Ok(Report {
        points,
        levels,
        differences,
        pooled_theta,
        summaries,
        yearly,
        screen,
    })
}

impl Report {
    pub fn results_kv(&self) -> String {
        let mut out = format!(
            "pooled_theta={:?}\nn_theta_obs={}\nn_countries_with_theta={}\n",
            self.pooled_theta,
            self.points
                .iter()
                .filter(|p| p.passes_screen && p.theta_c.is_some())
                .count(),
            self.summaries.len()
        );
        for (prefix, r) in [("levels", &self.levels), ("differences", &self.differences)] {
            for line in r.to_key_value().lines() {
                let _ = writeln!(out, "{prefix}.{line}");
            }
        }
        out
    }

    /// Result files as (file name, contents), in a fixed order.
    pub fn files(&self) -> Vec<(&'static str, String)> {
        vec![
            ("table1.txt", table1(&self.levels, &self.differences)),
            ("table2.txt", table2(&self.summaries, &self.screen)),
            ("figure1.csv", figure1_csv(&self.yearly)),
            ("figure1.svg", figure1_svg(&self.yearly)),
            ("countries.csv", countries_csv(&self.summaries)),
            ("derived.csv", derived_points_csv(&self.points)),
            ("results.txt", self.results_kv()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_sorted_for_lookup() {
        assert!(NAMES.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(NAMES.len(), 90);
        assert_eq!(country_name("US"), "USA");
        assert_eq!(country_name("QQ"), "QQ");
    }

    #[test]
    fn rounding_half_even_and_sign() {
        assert_eq!(fixed(0.125, 2), "0.12");
        assert_eq!(fixed(0.375, 2), "0.38");
        assert_eq!(fixed(-0.001, 2), "-0.00");
        assert_eq!(fixed(-0.1805, 3), "-0.180");
        assert_eq!(fixed(2.5, 0), "2");
    }

    #[test]
    fn table2_sorts_by_display_name() {
        let s = |c: &str| CountrySummary {
            country: c.into(),
            theta_mean: -0.04,
            n_periods: 18,
            first_year: 1983,
            last_year: 2020,
        };
        let text = table2(
            &[s("US"), s("UA"), s("CI"), s("CY")],
            &ScreenConfig::delta_growth(),
        );
        let order: Vec<&str> = text
            .lines()
            .skip(3)
            .map(|l| l.split("  ").next().unwrap().trim())
            .collect();
        assert_eq!(order, vec!["Cyprus", "Côte d’Ivoire", "USA", "Ukraine"]);
        assert!(text.contains("USA                            -0.04  83-20(18)"));
    }

    #[test]
    fn derived_csv_blank_absent_fields() {
        let p = DerivedPoint {
            country: "X".into(),
            year: 2000,
            gdp: 1.0,
            g: None,
            c_star: 0.8,
            delta_g: None,
            delta_c_star: None,
            theta_c: None,
            passes_screen: false,
        };
        assert_eq!(
            derived_points_csv(&[p]),
            "country,year,g,c_star,delta_g,delta_c_star,theta_c,passes_screen\nX,2000,,0.8,,,,false\n"
        );
    }
}
