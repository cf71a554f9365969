#![no_main]

use escalation_cli::config::Config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = Config::parse(text) {
        // Building the scenario may reject values but must not panic. Large
        // dose counts are skipped because enumerating the protocol is
        // exponential in the number of doses.
        if cfg.doses.unwrap_or(3) <= 4 {
            let _ = cfg.scenario();
        }
    }
});
