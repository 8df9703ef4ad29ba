#![no_main]

use libfuzzer_sys::fuzz_target;
use planekit::io;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = io::RunConfig::from_json(s);
    }
});
