#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(points) = fsdf::io::parse_ply_ascii(text) {
            assert!(points.iter().all(|p| p.iter().all(|v| v.is_finite())));
        }
    }
});
