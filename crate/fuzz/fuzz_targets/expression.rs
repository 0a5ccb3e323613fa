#![no_main]

use libfuzzer_sys::fuzz_target;
use pathcert::expr;

fuzz_target!(|src: &str| {
    if let Ok(e) = expr::parse(src) {
        let n = e.max_variable().max(1);
        let x: Vec<f64> = (0..n).map(|i| 0.25 + i as f64 * 0.5).collect();
        let _ = e.eval(&x);
        assert!(expr::parse_for_dimension(src, n).is_ok());
    }
});
