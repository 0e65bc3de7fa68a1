#![no_main]

use std::collections::BTreeMap;

use libfuzzer_sys::fuzz_target;
use neckforge::config::{parse_config_text, Command, RunConfig};

fuzz_target!(|data: &str| {
    if let Ok(file) = parse_config_text(data) {
        for command in Command::ALL {
            if let Ok(cfg) = RunConfig::from_file(command, &file, &BTreeMap::new()) {
                // a validated config survives a round trip through its raw text
                let again = RunConfig::new(command, cfg.raw.clone()).unwrap();
                assert_eq!(again.values, cfg.values);
            }
        }
    }
});
