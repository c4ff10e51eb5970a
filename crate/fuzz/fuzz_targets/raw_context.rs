#![no_main]

use libfuzzer_sys::fuzz_target;
use ulearn_core::context::{validate_instance, ContextTemplate, RawContext};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(raw) = RawContext::parse(text) else { return };
    let template = ContextTemplate::standard();
    if let Ok(snap) = validate_instance(&template, &raw) {
        assert_eq!(validate_instance(&template, &RawContext::from(&snap)).unwrap(), snap);
    }
});
