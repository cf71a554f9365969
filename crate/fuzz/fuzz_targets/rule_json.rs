#![no_main]

use escalation::extension::DoseRule;
use escalation::tally::Tally;
use libfuzzer_sys::fuzz_target;

// Decoded rules round-trip through JSON and answer within 0..=D.
fuzz_target!(|data: &[u8]| {
    let Ok(rule) = serde_json::from_slice::<DoseRule>(data) else { return };
    let json = serde_json::to_string(&rule).expect("rule serializes");
    let back: DoseRule = serde_json::from_str(&json).expect("serialized rule decodes");
    assert_eq!(back, rule);
    let dims = rule.params().doses();
    if dims <= 16 {
        let zero = Tally::zero(dims).unwrap();
        let rec = rule.recommend(&zero).expect("recommend on matching dims");
        assert!(rec as usize <= dims);
    }
});
