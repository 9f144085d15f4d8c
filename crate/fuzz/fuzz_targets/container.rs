#![no_main]

use libfuzzer_sys::fuzz_target;
use retarget2d::container::Container;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = Container::from_bytes(data) {
        let bytes = c.to_bytes().unwrap();
        Container::from_bytes(&bytes).unwrap();
    }
});
