#![no_main]

use libfuzzer_sys::fuzz_target;
use stripsynth::catalog::Catalog;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = Catalog::from_json_slice(data) {
        Catalog::from_json_str(&c.to_json_string()).expect("a valid catalog re-serializes to a valid catalog");
    }
});
