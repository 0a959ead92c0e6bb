#![no_main]

use critchain::sweep::config::SweepConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = SweepConfig::from_csv_header(text);
});
