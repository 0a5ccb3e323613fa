#![no_main]

use libfuzzer_sys::fuzz_target;
use pathcert::format::{load_path_json, parse_path_json};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if parse_path_json(s).is_ok() {
            if let Ok((_, path)) = load_path_json(s) {
                let (lo, hi) = path.domain();
                let _ = path.eval_with_derivative(hi);
                let _ = path.eval_with_derivative(0.5 * (lo + hi));
            }
        }
    }
});
