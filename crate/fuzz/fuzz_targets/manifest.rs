#![no_main]

use libfuzzer_sys::fuzz_target;
use stripsynth::pipeline::DatasetManifest;

fuzz_target!(|data: &[u8]| {
    let _ = DatasetManifest::from_json_slice(data);
});
