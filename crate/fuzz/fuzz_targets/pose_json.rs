#![no_main]

use libfuzzer_sys::fuzz_target;
use retarget2d::motiondata::{export_pose_json, parse_pose_json, Topology};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for topo in [Topology::standard(), Topology::with_toes()] {
        if let Ok(s) = parse_pose_json(text, &topo) {
            assert_eq!(s.joints(), topo.len());
            // Whatever parses must survive an export round trip.
            let again = export_pose_json(&s, &topo).unwrap();
            let back = parse_pose_json(&again, &topo).unwrap();
            assert_eq!(back.frames(), s.frames());
        }
    }
});
