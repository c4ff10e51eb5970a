#![no_main]

use libfuzzer_sys::fuzz_target;
use ulearn_core::context::ContextTemplate;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = ContextTemplate::parse(text) {
        assert_eq!(ContextTemplate::parse(&t.to_text()).unwrap(), t);
    }
});
