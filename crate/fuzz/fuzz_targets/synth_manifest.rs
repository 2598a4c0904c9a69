#![no_main]

use libfuzzer_sys::fuzz_target;
use shotbound::synthkit::parse_manifest;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // only parsing and validation: rendering an accepted spec can be arbitrarily large
    let _ = parse_manifest(text);
});
