#![no_main]

use libfuzzer_sys::fuzz_target;
use ulearn_core::geo::{format_pois, parse_pois};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let ingest = parse_pois(text);
    let again = parse_pois(&format_pois(&ingest.store));
    assert!(again.rejected.is_empty());
    assert_eq!(again.store, ingest.store);
});
