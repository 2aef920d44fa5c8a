#![no_main]

use libfuzzer_sys::fuzz_target;
use stripsynth::scaleopt::adapter::parse_output;

fuzz_target!(|data: &[u8]| {
    let _ = parse_output(data);
});
