use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;
use thrift_core::panel::read_panels_csv;
use thrift_core::wid::{assemble_dataset, parse_wid_csv, RawObservation, VariableMap};
use thrift_core::CountryPanel;

/// Inclusive year range written `a..b`; either end may be omitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct YearRange {
    pub first: i32,
    pub last: i32,
}

impl FromStr for YearRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("expected a..b, got `{s}`"))?;
        let end = |t: &str, default: i32| -> Result<i32, String> {
            let t = t.trim();
            if t.is_empty() {
                Ok(default)
            } else {
                t.parse().map_err(|_| format!("bad year `{t}`"))
            }
        };
        let range = Self {
            first: end(a, i32::MIN)?,
            last: end(b, i32::MAX)?,
        };
        if range.first > range.last {
            return Err(format!("empty year range `{s}`"));
        }
        Ok(range)
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Canonical panel CSVs or raw WID exports (detected from the header).
    #[arg(long, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    /// Comma-separated country codes to keep.
    #[arg(long, value_delimiter = ',')]
    pub countries: Vec<String>,
    /// Comma-separated country codes to drop.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,
    /// Year range, e.g. 1970..2020.
    #[arg(long)]
    pub years: Option<YearRange>,
}

enum Format {
    Panel,
    Wid,
}

fn sniff(path: &Path) -> Result<Format> {
    let mut header = String::new();
    BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?)
        .read_line(&mut header)
        .with_context(|| format!("reading {}", path.display()))?;
    let header = header.trim_start_matches('\u{feff}');
    let names: BTreeSet<&str> = header.trim().split(',').map(str::trim).collect();
    if ["country", "year", "K", "C", "GDP"]
        .iter()
        .all(|c| names.contains(c))
    {
        Ok(Format::Panel)
    } else {
        Ok(Format::Wid)
    }
}

pub struct Loaded {
    pub panels: Vec<CountryPanel>,
    pub notes: Vec<String>,
}

/// Reads every input, assembles WID exports into panels and applies the
/// country and year filters. Panels come back sorted by country code.
pub fn load(args: &InputArgs) -> Result<Loaded> {
    let mut panels = Vec::new();
    let mut raw: Vec<RawObservation> = Vec::new();
    let mut notes = Vec::new();
    for path in &args.input {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        match sniff(path)? {
            Format::Panel => panels.extend(
                read_panels_csv(file)
                    .with_context(|| format!("reading panel {}", path.display()))?,
            ),
            Format::Wid => {
                let parsed =
                    parse_wid_csv(file).with_context(|| format!("parsing {}", path.display()))?;
                if parsed.skipped > 0 {
                    notes.push(format!(
                        "{}: skipped {} malformed rows",
                        path.display(),
                        parsed.skipped
                    ));
                }
                raw.extend(parsed.observations);
            }
        }
    }
    if !raw.is_empty() {
        let assembly = assemble_dataset(&raw, &VariableMap::default())?;
        for r in &assembly.rejected {
            notes.push(format!("rejected {} {}: {}", r.country, r.year, r.reason));
        }
        panels.extend(assembly.panels);
    }
    panels.sort_by(|a, b| a.country().cmp(b.country()));
    if let Some(w) = panels.windows(2).find(|w| w[0].country() == w[1].country()) {
        bail!("country {} appears in more than one input", w[0].country());
    }
    let keep: BTreeSet<&str> = args.countries.iter().map(String::as_str).collect();
    let drop: BTreeSet<&str> = args.exclude.iter().map(String::as_str).collect();
    let panels: Vec<CountryPanel> = panels
        .into_iter()
        .filter(|p| keep.is_empty() || keep.contains(p.country()))
        .filter(|p| !drop.contains(p.country()))
        .map(|p| match args.years {
            Some(r) => p.restrict_years(r.first, r.last),
            None => p,
        })
        .filter(|p| !p.is_empty())
        .collect();
    if panels.is_empty() {
        bail!("no country panels left after reading and filtering the inputs");
    }
    Ok(Loaded { panels, notes })
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(thrift_core::wid::fetch::sha256_hex(&bytes))
}
