#![no_main]

use critchain::sweep::config::SweepConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = SweepConfig::from_text(text) {
        // anything accepted must survive a write/read cycle unchanged
        let again = SweepConfig::from_text(&cfg.to_text(true)).expect("re-parse of rendered config");
        assert_eq!(again, cfg);
    }
});
