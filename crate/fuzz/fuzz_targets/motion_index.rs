#![no_main]

use libfuzzer_sys::fuzz_target;
use retarget2d::retrieval::MotionIndex;

fuzz_target!(|data: &[u8]| {
    if let Ok(idx) = MotionIndex::from_bytes(data) {
        for n in 0..idx.len() {
            idx.code(n).unwrap();
        }
        let bytes = idx.to_bytes().unwrap();
        MotionIndex::from_bytes(&bytes).unwrap();
    }
});
