//! Fuzzes the only external text format the solver consumes: the flat
//! key=value run-configuration files. Parsing must never panic; accepted
//! configs must also survive validation and a manifest round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mcl_dgsem::app::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::from_text(text) {
        // Anything the parser accepts must be printable and re-parseable.
        let round = RunConfig::from_text(&cfg.to_text()).expect("manifest must round-trip");
        assert_eq!(round.to_text(), cfg.to_text());
    }
});
