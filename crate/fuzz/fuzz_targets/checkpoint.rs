#![no_main]

use libfuzzer_sys::fuzz_target;
use retarget2d::network::Checkpoint;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = Checkpoint::from_bytes(data) {
        let bytes = c.to_bytes().unwrap();
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap().params, c.params);
    }
});
