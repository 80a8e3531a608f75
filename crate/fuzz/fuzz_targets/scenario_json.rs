#![no_main]

use libfuzzer_sys::fuzz_target;
use singflow::scenario::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sc) = Scenario::from_json(text) {
        // Anything accepted must survive a serialize/parse cycle unchanged.
        let again = serde_json::to_string(&sc).expect("serialize");
        let back = Scenario::from_json(&again).expect("reparse");
        assert_eq!(serde_json::to_string(&back).expect("serialize"), again);
    }
});
