#![no_main]

use libfuzzer_sys::fuzz_target;
use retarget2d::motiondata::DatasetSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<DatasetSpec>(data) else { return };
    if spec.validate().is_ok() {
        let split = spec.split();
        assert!(!split.train_motions.is_empty() && !split.val_motions.is_empty());
        for i in 0..spec.motions.min(64) {
            spec.family(i);
        }
    }
});
