//! Replays the fuzz seed corpus through both config parsers on stable.

use std::fs;
use std::path::PathBuf;

use critchain::sweep::config::SweepConfig;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read_to_string(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn config_seeds_round_trip() {
    let all = seeds("config_text");
    assert!(all.len() >= 3);
    let mut accepted = 0;
    for (name, text) in &all {
        if let Ok(cfg) = SweepConfig::from_text(text) {
            accepted += 1;
            let again = SweepConfig::from_text(&cfg.to_text(true)).unwrap();
            assert_eq!(again, cfg, "{name}");
        }
    }
    assert!(accepted >= 3, "only {accepted} seeds parse");
    assert!(SweepConfig::from_text(&all.iter().find(|s| s.0 == "duplicate_key").unwrap().1).is_err());
}

#[test]
fn csv_seeds_parse() {
    for (name, text) in seeds("csv_header") {
        let parsed = SweepConfig::from_csv_header(&text);
        assert_eq!(parsed.is_ok(), name != "unterminated", "{name}: {parsed:?}");
    }
}
