//! Country panels of annual capital, consumption and GDP levels, plus the
//! canonical `country,year,K,C,GDP` interchange format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use thiserror::Error;

/// Header of the canonical panel interchange file.
pub const PANEL_HEADER: &str = "country,year,K,C,GDP";

#[derive(Debug, Error, PartialEq)]
pub enum PanelError {
    #[error("country {country}: no rows supplied")]
    Empty { country: String },
    #[error("country {country}, year {year}: duplicate year with conflicting values")]
    ConflictingDuplicate { country: String, year: i32 },
    #[error("country {country}, year {year}: nonpositive capital {value}")]
    NonPositiveCapital {
        country: String,
        year: i32,
        value: f64,
    },
    #[error("country {country}, year {year}: negative {field} {value}")]
    Negative {
        country: String,
        year: i32,
        field: &'static str,
        value: f64,
    },
    #[error("panel file: {0}")]
    Format(String),
}

/// One retained country-year. All three levels are finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub year: i32,
    pub capital: f64,
    pub consumption: f64,
    pub gdp: f64,
}

/// Raw input row; any level may be missing or non-finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelRow {
    pub year: i32,
    pub capital: Option<f64>,
    pub consumption: Option<f64>,
    pub gdp: Option<f64>,
}

impl PanelRow {
    pub fn new(year: i32, capital: f64, consumption: f64, gdp: f64) -> Self {
        Self {
            year,
            capital: Some(capital),
            consumption: Some(consumption),
            gdp: Some(gdp),
        }
    }

    fn complete(&self) -> Option<Observation> {
        let keep = |v: Option<f64>| v.filter(|x| x.is_finite());
        Some(Observation {
            year: self.year,
            capital: keep(self.capital)?,
            consumption: keep(self.consumption)?,
            gdp: keep(self.gdp)?,
        })
    }
}

impl From<(i32, f64, f64, f64)> for PanelRow {
    fn from((year, k, c, gdp): (i32, f64, f64, f64)) -> Self {
        PanelRow::new(year, k, c, gdp)
    }
}

/// Annual series for one country, sorted by strictly increasing year.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryPanel {
    country: String,
    observations: Vec<Observation>,
}

impl CountryPanel {
    /// Validates and sorts `rows`. Years missing any of K, C or GDP (or
    /// carrying a non-finite value) are dropped; exact duplicate rows
    /// collapse into one.
    pub fn build<R>(country: &str, rows: impl IntoIterator<Item = R>) -> Result<Self, PanelError>
    where
        R: Into<PanelRow>,
    {
        let rows: Vec<PanelRow> = rows.into_iter().map(Into::into).collect();
        if rows.is_empty() {
            return Err(PanelError::Empty {
                country: country.to_owned(),
            });
        }

        let mut by_year: BTreeMap<i32, Observation> = BTreeMap::new();
        for row in &rows {
            let Some(obs) = row.complete() else { continue };
            if obs.capital <= 0.0 {
                return Err(PanelError::NonPositiveCapital {
                    country: country.to_owned(),
                    year: obs.year,
                    value: obs.capital,
                });
            }
            for (field, value) in [("consumption", obs.consumption), ("GDP", obs.gdp)] {
                if value < 0.0 {
                    return Err(PanelError::Negative {
                        country: country.to_owned(),
                        year: obs.year,
                        field,
                        value,
                    });
                }
            }
            if let Some(prev) = by_year.insert(obs.year, obs) {
                if prev != obs {
                    return Err(PanelError::ConflictingDuplicate {
                        country: country.to_owned(),
                        year: obs.year,
                    });
                }
            }
        }

        Ok(Self {
            country: country.to_owned(),
            observations: by_year.into_values().collect(),
        })
    }

    pub fn country(&self) -> &str {
        &self.country
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn years(&self) -> Vec<i32> {
        self.observations.iter().map(|o| o.year).collect()
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Keeps only years inside `range` (inclusive).
    pub fn restrict_years(&self, first: i32, last: i32) -> Self {
        Self {
            country: self.country.clone(),
            observations: self
                .observations
                .iter()
                .filter(|o| o.year >= first && o.year <= last)
                .copied()
                .collect(),
        }
    }

    /// Multiplies every level by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            country: self.country.clone(),
            observations: self
                .observations
                .iter()
                .map(|o| Observation {
                    year: o.year,
                    capital: o.capital * factor,
                    consumption: o.consumption * factor,
                    gdp: o.gdp * factor,
                })
                .collect(),
        }
    }
}

/// Renders panels in the canonical interchange format, countries in the
/// order given. Values use the shortest representation that round-trips.
pub fn write_panels_csv(panels: &[CountryPanel]) -> String {
    let mut out = String::from(PANEL_HEADER);
    out.push('\n');
    for panel in panels {
        for o in panel.observations() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                panel.country(),
                o.year,
                o.capital,
                o.consumption,
                o.gdp
            );
        }
    }
    out
}

/// Parses the canonical interchange format. Empty or unparsable level
/// fields count as missing, so the affected year is dropped.
pub fn read_panels_csv<R: Read>(input: R) -> Result<Vec<CountryPanel>, PanelError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| PanelError::Format(e.to_string()))?
        .clone();
    let expected: Vec<&str> = PANEL_HEADER.split(',').collect();
    let mut index = [0usize; 5];
    for (slot, name) in index.iter_mut().zip(&expected) {
        *slot = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| PanelError::Format(format!("missing column `{name}`")))?;
    }

    let mut rows: BTreeMap<String, Vec<PanelRow>> = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| PanelError::Format(e.to_string()))?;
        let field = |i: usize| record.get(index[i]).unwrap_or("");
        let year: i32 = field(1).parse().map_err(|_| {
            PanelError::Format(format!("row {}: bad year `{}`", line + 2, field(1)))
        })?;
        let level = |i: usize| field(i).parse::<f64>().ok();
        rows.entry(field(0).to_owned()).or_default().push(PanelRow {
            year,
            capital: level(2),
            consumption: level(3),
            gdp: level(4),
        });
    }

    rows.into_iter()
        .map(|(country, rows)| CountryPanel::build(&country, rows))
        .collect()
}
