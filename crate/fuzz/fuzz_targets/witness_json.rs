#![no_main]

use libfuzzer_sys::fuzz_target;
use pathcert::format::parse_witness_json;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(source) = parse_witness_json(s) {
            if let Ok(w) = source.sequence() {
                assert_eq!(w.dimension(), source.dimension());
            }
        }
    }
});
