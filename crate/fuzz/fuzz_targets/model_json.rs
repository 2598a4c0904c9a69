#![no_main]

use libfuzzer_sys::fuzz_target;
use shotbound::classify::GbdtModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = GbdtModel::from_json(text) {
        let back = GbdtModel::from_json(&model.to_json()).expect("serialized model parses");
        assert_eq!(back.trees.len(), model.trees.len());
    }
});
