#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((n_div, descriptors)) = fsdf::io::read_descriptor_dump(data) {
        let bytes = fsdf::io::write_descriptor_dump(&descriptors, n_div)
            .expect("parsed records have the declared length");
        let (n2, again) = fsdf::io::read_descriptor_dump(&bytes).expect("canonical form parses");
        assert_eq!(n2, n_div);
        assert_eq!(again.len(), descriptors.len());
    }
});
