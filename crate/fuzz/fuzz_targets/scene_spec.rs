#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = fsdf::io::parse_scene_spec(text) {
            let _ = spec.validate();
        }
    }
});
