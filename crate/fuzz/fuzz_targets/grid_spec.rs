#![no_main]

use libfuzzer_sys::fuzz_target;
use pathcert::sampling::GridSpec;

fuzz_target!(|src: &str| {
    if let Ok(g) = src.parse::<GridSpec>() {
        let again: GridSpec = format!("{g}").parse().expect("display output reparses");
        assert_eq!(g, again);
    }
});
