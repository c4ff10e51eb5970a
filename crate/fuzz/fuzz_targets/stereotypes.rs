#![no_main]

use libfuzzer_sys::fuzz_target;
use ulearn_core::cases::{format_stereotypes, parse_stereotypes};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(catalog) = parse_stereotypes(text) {
        assert_eq!(parse_stereotypes(&format_stereotypes(&catalog)).unwrap(), catalog);
    }
});
