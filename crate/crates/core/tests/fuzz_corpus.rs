//! Replays the fuzz corpus through the same checks as the fuzz targets.

use std::path::Path;

use wellmirror::config::RunConfig;
use wellmirror::io::{self, CsvHeader};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.display().to_string(), std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn config_seeds() {
    let mut accepted = 0;
    for (name, text) in seeds("config_parse") {
        if let Ok(cfg) = RunConfig::from_toml_str(&text) {
            let echo = cfg.to_toml_string();
            assert_eq!(RunConfig::from_toml_str(&echo).unwrap().to_toml_string(), echo, "{name}");
            accepted += 1;
        }
    }
    assert!(accepted >= 2);
}

#[test]
fn series_seeds() {
    let mut accepted = 0;
    for (name, text) in seeds("series_csv") {
        if let Ok(series) = io::parse_series_csv(&text) {
            let header = CsvHeader::new("fuzz", "", 0);
            let written = io::series_csv(&header, &series, 0.0);
            assert_eq!(io::series_csv(&header, &io::parse_series_csv(&written).unwrap(), 0.0), written, "{name}");
            accepted += 1;
        }
    }
    assert!(accepted >= 2);
}
