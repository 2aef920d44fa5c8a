#![no_main]

use libfuzzer_sys::fuzz_target;
use stripsynth::scaleopt::adapter::parse_request;

fuzz_target!(|data: &[u8]| {
    let _ = parse_request(data);
});
