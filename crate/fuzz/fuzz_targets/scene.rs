#![no_main]

use libfuzzer_sys::fuzz_target;
use stripsynth::scenegen::SceneSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = SceneSpec::from_json_slice(data) {
        let _ = s.to_json_string();
    }
});
