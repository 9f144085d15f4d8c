#![no_main]

use libfuzzer_sys::fuzz_target;
use retarget2d::trainer::TrainConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = TrainConfig::parse(text) {
        let again = serde_json::to_string(&c).unwrap();
        assert_eq!(TrainConfig::parse(&again).unwrap(), c);
    }
});
