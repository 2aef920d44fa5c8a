#![no_main]

use libfuzzer_sys::fuzz_target;
use stripsynth::annotate::AnnotationSet;

fuzz_target!(|data: &[u8]| {
    if let Ok(a) = AnnotationSet::from_json_slice(data) {
        let _ = a.to_json_string();
    }
});
