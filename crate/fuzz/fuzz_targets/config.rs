#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let base = fsdf::pipeline::PipelineConfig::new(0.1);
        if let Ok(cfg) = fsdf::io::parse_config(text, &base) {
            // Accepted configs survive a serialize→parse round trip.
            let again = fsdf::io::parse_config(&fsdf::io::serialize_config(&cfg), &base)
                .expect("serialized config parses");
            assert_eq!(again, cfg);
        }
    }
});
