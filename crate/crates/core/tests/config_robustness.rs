use std::collections::BTreeMap;

use neckforge::config::*;
use proptest::prelude::*;

fn seeds(dir: &str) -> Vec<String> {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fuzz/corpus/");
    let mut out = Vec::new();
    for entry in std::fs::read_dir(format!("{root}{dir}")).unwrap() {
        out.push(std::fs::read_to_string(entry.unwrap().path()).unwrap());
    }
    out
}

#[test]
fn corpus_seeds_parse_or_fail_cleanly() {
    for text in seeds("config_parse") {
        if let Ok(file) = parse_config_text(&text) {
            for c in Command::ALL {
                let _ = RunConfig::from_file(c, &file, &BTreeMap::new());
            }
        }
    }
    let csv = seeds("line_function_csv");
    assert!(csv.iter().any(|t| read_line_function_csv(t, 0).is_ok()));
    assert!(csv.iter().any(|t| read_line_function_csv(t, 0).is_err()));
    for text in seeds("range_specs") {
        let _ = (parse_int_range(&text), parse_float_grid(&text), parse_float_list(&text));
    }
}

proptest! {
    #[test]
    fn config_parser_never_panics(text in "[\\[\\]a-z_=#0-9.,: \\n-]{0,200}") {
        if let Ok(file) = parse_config_text(&text) {
            for c in Command::ALL {
                if let Ok(cfg) = RunConfig::from_file(c, &file, &BTreeMap::new()) {
                    let again = RunConfig::new(c, cfg.raw.clone()).unwrap();
                    prop_assert_eq!(again.values, cfg.values);
                }
            }
        }
    }

    #[test]
    fn range_parsers_never_panic(text in "[0-9.,:e+-]{0,40}") {
        if let Ok(v) = parse_int_range(&text) {
            prop_assert!(!v.is_empty() && v.len() <= MAX_EXPANSION);
        }
        if let Ok(v) = parse_float_grid(&text) {
            prop_assert!(v.iter().all(|x| x.is_finite()));
        }
        let _ = parse_float_list(&text);
    }

    #[test]
    fn int_ranges_are_inclusive(a in 0usize..1000, len in 0usize..50) {
        let v = parse_int_range(&format!("{a}..{}", a + len)).unwrap();
        prop_assert_eq!(v.len(), len + 1);
        prop_assert_eq!(v[0], a);
        prop_assert_eq!(*v.last().unwrap(), a + len);
    }

    #[test]
    fn grid_includes_endpoint(a in -10.0f64..10.0, steps in 1usize..200, step in 1e-3f64..1.0) {
        let b = a + steps as f64 * step;
        let v = parse_float_grid(&format!("{a}:{step}:{b}")).unwrap();
        prop_assert_eq!(v.len(), steps + 1);
    }

    #[test]
    fn csv_reader_round_trips(s0 in -50.0f64..50.0, ds in 1e-3f64..1.0, vals in prop::collection::vec(-1e3f64..1e3, 16..64)) {
        let mut text = String::from("s,value\n");
        for (k, v) in vals.iter().enumerate() {
            text.push_str(&format!("{:.17e},{:.17e}\n", s0 + k as f64 * ds, v));
        }
        let f = read_line_function_csv(&text, 2).unwrap();
        prop_assert_eq!(&f.values, &vals);
        prop_assert!((f.ds - ds).abs() <= 1e-9 * ds.max(1.0));
    }

    #[test]
    fn csv_reader_never_panics(text in "[0-9.,e\\-sval#\\n ]{0,300}") {
        let _ = read_line_function_csv(&text, 0);
    }
}
