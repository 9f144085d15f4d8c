#![no_main]

use libfuzzer_sys::fuzz_target;
use retarget2d::motiondata::{Dataset, DatasetManifest};

// Input: manifest JSON, a NUL byte, then the sample payload.
fuzz_target!(|data: &[u8]| {
    let cut = data.iter().position(|&b| b == 0).unwrap_or(data.len());
    let Ok(text) = std::str::from_utf8(&data[..cut]) else { return };
    let payload = data.get(cut + 1..).unwrap_or(&[]);
    if let Ok(m) = DatasetManifest::parse(text) {
        let _ = Dataset::from_parts(m, payload);
    }
});
