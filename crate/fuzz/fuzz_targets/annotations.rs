#![no_main]

use libfuzzer_sys::fuzz_target;
use shotbound::dataprep::parse_frame_list;
use shotbound::events::{format_annotations, parse_events};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(events) = parse_events(text) {
        let again = parse_events(&format_annotations(&events)).expect("formatted annotations parse");
        assert_eq!(again.len(), events.len());
    }
    let _ = parse_frame_list(text);
});
