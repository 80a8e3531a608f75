#![no_main]

use libfuzzer_sys::fuzz_target;
use singflow::scenario::{parse_list, parse_pair, parse_params};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(map) = parse_params(text) {
        assert!(map.values().all(|v| v.is_finite()));
        let joined: Vec<String> = map.iter().map(|(k, v)| format!("{k}={v:?}")).collect();
        assert_eq!(parse_params(&joined.join(",")).expect("reparse"), map);
    }
    let _ = parse_list(text);
    let _ = parse_pair(text);
});
