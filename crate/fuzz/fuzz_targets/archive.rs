#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(submap) = fsdf::io::read_submap(data, 0) {
        // Accepted archives re-serialize canonically: writing and
        // re-reading must reproduce the same bytes.
        let bytes = fsdf::io::write_submap(&submap);
        let again = fsdf::io::read_submap(&bytes, 0).expect("canonical form parses");
        assert_eq!(fsdf::io::write_submap(&again), bytes);
    }
});
