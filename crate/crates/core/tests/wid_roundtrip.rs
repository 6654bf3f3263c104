use std::collections::BTreeMap;

use proptest::prelude::*;
use thrift_core::dgp::{simulate_batch, ScenarioKind};
use thrift_core::wid::{
    assemble_dataset, parse_wid_csv, render_wid_extract, RawObservation, VariableMap,
};
use thrift_core::CountryPanel;

fn known_panels() -> Vec<CountryPanel> {
    let mut panels = simulate_batch(ScenarioKind::Thrift, 3, 12, 5, 0.01).unwrap();
    panels.extend(simulate_batch(ScenarioKind::FreeGrowth, 2, 9, 50, 0.0).unwrap());
    panels.sort_by(|a, b| a.country().cmp(b.country()));
    panels
}

/// Header plus data lines, with a few distractor rows appended.
fn extract_lines(panels: &[CountryPanel], delimiter: char) -> (String, Vec<String>) {
    let text = render_wid_extract(panels, &VariableMap::default(), delimiter);
    let mut lines = text.lines().map(str::to_owned);
    let header = lines.next().unwrap();
    let mut data: Vec<String> = lines.collect();
    let d = delimiter;
    data.push(format!(
        "T000{d}mnweal999i{d}p90p100{d}1985{d}1.5{d}999{d}i"
    ));
    data.push(format!("T000{d}npopul999i{d}p0p100{d}1985{d}3{d}999{d}i"));
    data.push(format!("T000{d}mnweal999i{d}p0p100{d}n/a{d}3{d}999{d}i"));
    (header, data)
}

#[test]
fn round_trip_both_delimiters() {
    let panels = known_panels();
    for d in [';', ','] {
        let (header, data) = extract_lines(&panels, d);
        let text = format!("{header}\n{}\n", data.join("\n"));
        let parsed = parse_wid_csv(text.as_bytes()).unwrap();
        assert_eq!(parsed.skipped, 1);
        let assembly = assemble_dataset(&parsed.observations, &VariableMap::default()).unwrap();
        assert!(assembly.rejected.is_empty());
        assert_eq!(assembly.panels, panels);
    }
}

#[test]
fn every_output_year_traces_to_four_inputs() {
    let panels = known_panels();
    let text = render_wid_extract(&panels, &VariableMap::default(), ';');
    let mut obs = parse_wid_csv(text.as_bytes()).unwrap().observations;
    // drop one household-consumption row; that year must disappear
    let victim = obs
        .iter()
        .position(|o| o.variable.starts_with("mconhn") && o.country == "F000")
        .unwrap();
    let gone: RawObservation = obs.remove(victim);
    let assembly = assemble_dataset(&obs, &VariableMap::default()).unwrap();
    let f = assembly
        .panels
        .iter()
        .find(|p| p.country() == "F000")
        .unwrap();
    assert!(!f.years().contains(&gone.year));

    let mut support: BTreeMap<(String, i32), usize> = BTreeMap::new();
    for o in &obs {
        *support.entry((o.country.clone(), o.year)).or_default() += 1;
    }
    for p in &assembly.panels {
        for y in p.years() {
            assert!(support[&(p.country().to_owned(), y)] >= 4);
        }
    }
}

fn data_len() -> usize {
    extract_lines(&known_panels(), ';').1.len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn row_order_never_matters(order in Just((0..data_len()).collect::<Vec<_>>()).prop_shuffle(), semicolon in any::<bool>()) {
        let panels = known_panels();
        let d = if semicolon { ';' } else { ',' };
        let (header, data) = extract_lines(&panels, d);
        let shuffled: Vec<&str> = order.iter().map(|&i| data[i].as_str()).collect();
        let text = format!("{header}\n{}\n", shuffled.join("\n"));
        let parsed = parse_wid_csv(text.as_bytes()).unwrap();
        let assembly = assemble_dataset(&parsed.observations, &VariableMap::default()).unwrap();
        prop_assert_eq!(assembly.panels, panels);
    }
}
