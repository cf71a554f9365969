#![no_main]

use escalation::tally::Tally;
use libfuzzer_sys::fuzz_target;

// Anything that parses must print back to a string that parses to the same
// tally, and printing is canonical.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(q) = text.parse::<Tally>() {
        let printed = q.to_string();
        let again: Tally = printed.parse().expect("printed tally reparses");
        assert_eq!(again, q);
        assert_eq!(again.to_string(), printed);
        assert!(q.doses().iter().all(|d| d.tox <= d.n));
    }
});
