use std::fs;
use std::path::PathBuf;

use spdsim::io::{read_events_csv, read_events_json, read_iv_csv, read_rates_csv};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .filter(|(name, _)| name.starts_with("seed-"))
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn corpus_seeds_parse() {
    for (name, data) in seeds("read_events_csv") {
        read_events_csv(&data[..]).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, data) in seeds("read_events_json") {
        read_events_json(&data[..]).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, data) in seeds("read_rates_csv") {
        read_rates_csv(&data[..]).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, data) in seeds("read_iv_csv") {
        read_iv_csv(&data[..]).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
