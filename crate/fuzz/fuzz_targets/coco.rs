#![no_main]

use libfuzzer_sys::fuzz_target;
use stripsynth::coco::CocoDataset;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = CocoDataset::from_json_slice(data) {
        let _ = d.ground_truth();
        let _ = d.class_count();
    }
});
