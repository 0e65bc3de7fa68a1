#![no_main]

use libfuzzer_sys::fuzz_target;
use neckforge::config::{parse_float_grid, parse_float_list, parse_int_range, MAX_EXPANSION};

fuzz_target!(|data: &str| {
    if let Ok(v) = parse_int_range(data) {
        assert!(!v.is_empty() && v.len() <= MAX_EXPANSION);
    }
    if let Ok(v) = parse_float_grid(data) {
        assert!(v.len() <= MAX_EXPANSION + 1);
        assert!(v.iter().all(|x| x.is_finite()));
    }
    let _ = parse_float_list(data);
});
