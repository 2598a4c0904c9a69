#![no_main]

use libfuzzer_sys::fuzz_target;
use shotbound::frameio::parse_netpbm;

fuzz_target!(|data: &[u8]| {
    if let Ok(frame) = parse_netpbm(data, 0) {
        assert_eq!(frame.y().len(), frame.width() * frame.height());
    }
});
