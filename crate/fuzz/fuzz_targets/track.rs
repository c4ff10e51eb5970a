#![no_main]

use libfuzzer_sys::fuzz_target;
use ulearn_core::geo::{format_track, parse_track};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(track) = parse_track(text) {
        assert_eq!(parse_track(&format_track(&track)).unwrap(), track);
        let (along, lateral) = track.locate(&track.points()[0].position);
        assert!(along.is_finite() && lateral.is_finite());
    }
});
