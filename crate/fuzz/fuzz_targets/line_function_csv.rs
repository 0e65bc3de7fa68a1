#![no_main]

use libfuzzer_sys::fuzz_target;
use neckforge::config::read_line_function_csv;

fuzz_target!(|data: &str| {
    if let Ok(f) = read_line_function_csv(data, 0) {
        assert!(f.ds > 0.0 && f.ds.is_finite());
        assert!(f.values.iter().all(|v| v.is_finite()));
    }
});
