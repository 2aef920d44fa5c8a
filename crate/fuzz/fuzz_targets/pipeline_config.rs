#![no_main]

use libfuzzer_sys::fuzz_target;
use stripsynth::pipeline::PipelineConfig;

fuzz_target!(|data: &[u8]| {
    let _ = PipelineConfig::from_json_slice(data);
});
