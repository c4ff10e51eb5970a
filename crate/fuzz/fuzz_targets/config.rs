#![no_main]

use libfuzzer_sys::fuzz_target;
use ulearn_core::engine::EngineConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = EngineConfig::parse(text) {
        assert_eq!(EngineConfig::parse(&c.to_text()).unwrap(), c);
    }
});
