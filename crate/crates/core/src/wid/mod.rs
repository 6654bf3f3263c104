//! World Inequality Database bulk exports: parsing, assembly of capital,
//! consumption and GDP panels, and an optional download cache.

mod assemble;
pub mod fetch;
mod parse;

use std::fs::File;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::panel::PanelError;

pub use assemble::{assemble_dataset, render_wid_extract, Assembly, RejectedYear, VariableMap};
pub use fetch::{fetch_wid_bulk, Cache, CountrySelection, FetchError, FetchOptions, Transport};
pub use parse::{detect_delimiter, parse_wid_csv, ParsedExport, RawObservation};

#[derive(Debug, Error)]
pub enum WidError {
    #[error("empty input")]
    EmptyInput,
    #[error("missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("{country} {year}: several distinct values match one variable: {}", .codes.join(", "))]
    Ambiguous {
        country: String,
        year: i32,
        codes: Vec<String>,
    },
    #[error("invalid variable map: {0}")]
    InvalidVariableMap(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Panel(#[from] PanelError),
}

/// Parses several export files into one observation list.
pub fn parse_wid_files<P: AsRef<Path>>(paths: &[P]) -> Result<ParsedExport, WidError> {
    let mut all = ParsedExport::default();
    for path in paths {
        let parsed = parse_wid_csv(File::open(path)?)?;
        all.observations.extend(parsed.observations);
        all.skipped += parsed.skipped;
    }
    Ok(all)
}
