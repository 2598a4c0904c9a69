#![no_main]

use libfuzzer_sys::fuzz_target;
use shotbound::frameio::{parse_y4m_header, Y4mReader};

fuzz_target!(|data: &[u8]| {
    let _ = parse_y4m_header(data);
    if let Ok(reader) = Y4mReader::new(data) {
        // a tiny header can still promise huge frames; stop at the first error
        for frame in reader.take(64) {
            if frame.is_err() {
                break;
            }
        }
    }
});
