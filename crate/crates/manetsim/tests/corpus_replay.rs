//! Replays the checked-in fuzz corpus through the same entry points the
//! fuzz targets drive, so the corpus and the parsers stay in sync without a
//! nightly toolchain.

use std::fs;
use std::path::PathBuf;

use manetsim::plot::{parse_aggregate_csv, render_line_chart, GroupKey, Metric};
use manetsim::{SimulationConfig, SweepSpec};

fn corpus_dir(target: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target)
}

fn corpus_inputs(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = corpus_dir(target);
    let mut entries: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("corpus dir {}: {e}", dir.display()))
        .map(|entry| entry.unwrap().path())
        .collect();
    entries.sort();
    assert!(!entries.is_empty(), "no corpus seeds in {}", dir.display());
    entries
        .into_iter()
        .map(|path| {
            let bytes = fs::read(&path).unwrap();
            (path, bytes)
        })
        .collect()
}

#[test]
fn parse_config_corpus() {
    for (path, bytes) in corpus_inputs("parse_config") {
        let Ok(text) = std::str::from_utf8(&bytes) else {
            continue;
        };
        if let Ok(config) = SimulationConfig::parse(text) {
            config
                .validate()
                .unwrap_or_else(|e| panic!("{}: invalid parsed config: {e}", path.display()));
            let again = SimulationConfig::parse(&config.to_parameter_file()).unwrap();
            assert_eq!(again, config, "{}: round trip drifted", path.display());
        }
    }
}

#[test]
fn parse_sweep_spec_corpus() {
    let base = SimulationConfig::default();
    for (_, bytes) in corpus_inputs("parse_sweep_spec") {
        let Ok(text) = std::str::from_utf8(&bytes) else {
            continue;
        };
        let _ = SweepSpec::parse(text, &base);
    }
}

#[test]
fn parse_aggregate_csv_corpus() {
    for (_, bytes) in corpus_inputs("parse_aggregate_csv") {
        let Ok(text) = std::str::from_utf8(&bytes) else {
            continue;
        };
        if let Ok(rows) = parse_aggregate_csv(text) {
            for group in GroupKey::ALL {
                let _ = render_line_chart(&rows, Metric::ResponseRatio, group, &[]);
            }
        }
    }
}
