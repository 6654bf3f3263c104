use std::io::Read;

use super::WidError;

/// One data row of a WID bulk export.
#[derive(Debug, Clone, PartialEq)]
pub struct RawObservation {
    pub country: String,
    pub variable: String,
    pub percentile: String,
    pub year: i32,
    pub value: f64,
}

/// Parsed rows plus the number of data rows skipped as malformed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedExport {
    pub observations: Vec<RawObservation>,
    pub skipped: usize,
}

const REQUIRED: [&str; 5] = ["country", "variable", "percentile", "year", "value"];
const YEARS: std::ops::RangeInclusive<i32> = 1800..=2100;

/// Semicolon when the header line contains one, comma otherwise.
pub fn detect_delimiter(header: &str) -> u8 {
    let semis = header.matches(';').count();
    let commas = header.matches(',').count();
    if semis >= commas && semis > 0 {
        b';'
    } else {
        b','
    }
}

/// Parses a delimiter-separated WID export. Columns are located by name;
/// extra columns (`age`, `pop`, ...) are ignored. Rows whose year or value
/// does not parse, is non-finite, or whose year falls outside 1800..=2100
/// are skipped and counted.
pub fn parse_wid_csv<R: Read>(mut input: R) -> Result<ParsedExport, WidError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let text = text.trim_start_matches('\u{feff}');
    let Some(header) = text.lines().find(|l| !l.trim().is_empty()) else {
        return Err(WidError::EmptyInput);
    };
    let delimiter = detect_delimiter(header);

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let mut index = [0usize; 5];
    for (slot, name) in index.iter_mut().zip(REQUIRED) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or(WidError::MissingColumn(name))?;
    }

    let mut parsed = ParsedExport::default();
    for record in reader.records() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let field = |i: usize| record.get(index[i]).unwrap_or("");
        let year = field(3).parse::<i32>().ok().filter(|y| YEARS.contains(y));
        let value = field(4).parse::<f64>().ok().filter(|v| v.is_finite());
        match (year, value) {
            (Some(year), Some(value)) => parsed.observations.push(RawObservation {
                country: field(0).to_owned(),
                variable: field(1).to_owned(),
                percentile: field(2).to_owned(),
                year,
                value,
            }),
            _ => parsed.skipped += 1,
        }
    }
    Ok(parsed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn us_2015() -> RawObservation {
        RawObservation {
            country: "US".into(),
            variable: "mnweal999i".into(),
            percentile: "p0p100".into(),
            year: 2015,
            value: 8.6e13,
        }
    }

    #[test]
    fn semicolon_row() {
        let text = "country;variable;percentile;year;value;age;pop\nUS;mnweal999i;p0p100;2015;8.6e13;999;i\n";
        let parsed = parse_wid_csv(text.as_bytes()).unwrap();
        assert_eq!(parsed.observations, vec![us_2015()]);
        assert_eq!(parsed.skipped, 0);
    }

    #[test]
    fn comma_row_is_identical() {
        let text = "country,variable,percentile,year,value\nUS,mnweal999i,p0p100,2015,8.6e13\n";
        assert_eq!(
            parse_wid_csv(text.as_bytes()).unwrap().observations,
            vec![us_2015()]
        );
    }

    #[test]
    fn malformed_rows_are_counted() {
        let text = "country;variable;percentile;year;value\n\
                    US;mnweal999i;p0p100;n/a;1\n\
                    US;mnweal999i;p0p100;2015;\n\
                    US;mnweal999i;p0p100;1700;1\n\
                    US;mnweal999i;p0p100;2015;8.6e13\n";
        let parsed = parse_wid_csv(text.as_bytes()).unwrap();
        assert_eq!(parsed.skipped, 3);
        assert_eq!(parsed.observations.len(), 1);
    }

    #[test]
    fn missing_column_is_named() {
        let err = parse_wid_csv("country;variable;year;value\n".as_bytes()).unwrap_err();
        assert!(matches!(err, WidError::MissingColumn("percentile")));
    }

    #[test]
    fn empty_input_is_fatal() {
        assert!(matches!(
            parse_wid_csv("\n  \n".as_bytes()),
            Err(WidError::EmptyInput)
        ));
    }

    #[test]
    fn columns_in_any_order() {
        let text = "year;value;country;percentile;variable\n2015;8.6e13;US;p0p100;mnweal999i\n";
        assert_eq!(
            parse_wid_csv(text.as_bytes()).unwrap().observations,
            vec![us_2015()]
        );
    }
}
