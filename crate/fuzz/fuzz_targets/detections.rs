#![no_main]

use libfuzzer_sys::fuzz_target;
use stripsynth::evalkit::io::parse_detections;

fuzz_target!(|data: &[u8]| {
    let _ = parse_detections(data);
});
