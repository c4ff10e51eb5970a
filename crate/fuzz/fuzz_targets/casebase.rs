#![no_main]

use libfuzzer_sys::fuzz_target;
use ulearn_core::cases::CaseBase;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cb) = CaseBase::from_jsonl(text) {
        assert_eq!(CaseBase::from_jsonl(&cb.to_jsonl()).unwrap(), cb);
    }
});
