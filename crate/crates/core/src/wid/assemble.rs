use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{RawObservation, WidError};
use crate::panel::{CountryPanel, PanelRow};

/// Which WID variables supply capital, the two consumption components and
/// GDP. Codes match by prefix, so `mnweal` matches `mnweal999i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableMap {
    pub capital: String,
    pub gov_consumption: String,
    pub household_consumption: String,
    pub gdp: String,
    pub percentile: String,
}

impl Default for VariableMap {
    fn default() -> Self {
        Self {
            capital: "mnweal".into(),
            gov_consumption: "mcongo".into(),
            household_consumption: "mconhn".into(),
            gdp: "mgdpro".into(),
            percentile: "p0p100".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Slot {
    Capital,
    Gov,
    Household,
    Gdp,
}

impl VariableMap {
    pub fn validate(&self) -> Result<(), WidError> {
        let codes = self.codes();
        for (i, a) in codes.iter().enumerate() {
            if a.is_empty() || codes[i + 1..].contains(a) {
                return Err(WidError::InvalidVariableMap(format!(
                    "codes must be nonempty and distinct: {codes:?}"
                )));
            }
        }
        Ok(())
    }

    fn codes(&self) -> [&str; 4] {
        [
            &self.capital,
            &self.gov_consumption,
            &self.household_consumption,
            &self.gdp,
        ]
    }

    fn slot(&self, variable: &str) -> Option<Slot> {
        const SLOTS: [Slot; 4] = [Slot::Capital, Slot::Gov, Slot::Household, Slot::Gdp];
        self.codes()
            .iter()
            .zip(SLOTS)
            .find(|(code, _)| variable.starts_with(**code))
            .map(|(_, s)| s)
    }
}

/// A country-year whose complete data violate the panel invariants
/// (nonpositive capital, negative consumption or GDP) and was left out.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedYear {
    pub country: String,
    pub year: i32,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assembly {
    /// Sorted by country code.
    pub panels: Vec<CountryPanel>,
    pub rejected: Vec<RejectedYear>,
}

/// Builds one panel per country from the four mapped variables. A year is
/// kept only when capital, both consumption parts and GDP are present;
/// consumption is the sum of the government and household parts.
pub fn assemble_dataset(
    observations: &[RawObservation],
    map: &VariableMap,
) -> Result<Assembly, WidError> {
    map.validate()?;
    let mut cells: BTreeMap<(&str, i32, Slot), (f64, &str)> = BTreeMap::new();
    for obs in observations {
        if obs.percentile != map.percentile {
            continue;
        }
        let Some(slot) = map.slot(&obs.variable) else {
            continue;
        };
        let key = (obs.country.as_str(), obs.year, slot);
        match cells.get(&key) {
            Some(&(value, code)) if value != obs.value => {
                let mut codes = vec![code.to_owned(), obs.variable.clone()];
                codes.sort();
                return Err(WidError::Ambiguous {
                    country: obs.country.clone(),
                    year: obs.year,
                    codes,
                });
            }
            Some(_) => {}
            None => {
                cells.insert(key, (obs.value, &obs.variable));
            }
        }
    }

    let mut rows: BTreeMap<&str, BTreeMap<i32, [Option<f64>; 4]>> = BTreeMap::new();
    for ((country, year, slot), (value, _)) in cells {
        rows.entry(country).or_default().entry(year).or_default()[slot as usize] = Some(value);
    }

    let mut assembly = Assembly::default();
    for (country, years) in rows {
        let mut kept = Vec::new();
        for (year, cell) in years {
            let [Some(k), Some(gov), Some(hh), Some(gdp)] = cell else {
                continue;
            };
            let c = gov + hh;
            let reason = if k <= 0.0 {
                Some(format!("nonpositive capital {k}"))
            } else if c < 0.0 {
                Some(format!("negative consumption {c}"))
            } else if gdp < 0.0 {
                Some(format!("negative GDP {gdp}"))
            } else {
                None
            };
            match reason {
                Some(reason) => assembly.rejected.push(RejectedYear {
                    country: country.to_owned(),
                    year,
                    reason,
                }),
                None => kept.push(PanelRow::new(year, k, c, gdp)),
            }
        }
        if !kept.is_empty() {
            assembly.panels.push(CountryPanel::build(country, kept)?);
        }
    }
    Ok(assembly)
}

/// Writes panels back out as a WID-style extract: capital and GDP under
/// `{code}999i`, consumption split 60/40 between the government and
/// household codes. The split is exact, so assembling the extract returns
/// the original panels.
pub fn render_wid_extract(panels: &[CountryPanel], map: &VariableMap, delimiter: char) -> String {
    let d = delimiter;
    let mut out = format!("country{d}variable{d}percentile{d}year{d}value{d}age{d}pop\n");
    for panel in panels {
        for o in panel.observations() {
            let gov = 0.6 * o.consumption;
            let hh = o.consumption - gov;
            for (code, value) in [
                (&map.capital, o.capital),
                (&map.gov_consumption, gov),
                (&map.household_consumption, hh),
                (&map.gdp, o.gdp),
            ] {
                let _ = writeln!(
                    out,
                    "{}{d}{code}999i{d}{}{d}{}{d}{:?}{d}999{d}i",
                    panel.country(),
                    map.percentile,
                    o.year,
                    value
                );
            }
        }
    }
    out
}
