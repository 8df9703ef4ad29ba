#![no_main]

use libfuzzer_sys::fuzz_target;
use planekit::io;

fuzz_target!(|data: &[u8]| {
    let _ = io::decode_depth_png(data);
});
