#![no_main]

use libfuzzer_sys::fuzz_target;
use shotbound::dataprep::{read_manifest, read_votes, vote_records};

fuzz_target!(|data: &[u8]| {
    let _ = read_manifest(data);
    if let Ok(votes) = read_votes(data) {
        let _ = vote_records(&votes, 5, 2);
    }
});
