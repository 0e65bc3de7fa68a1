//! Runs the ten acceptance criteria, one `[PASS]`/`[FAIL]` line each.

use neckforge::acceptance::{run, CRITERIA};

fn main() {
    let mut failed = Vec::new();
    for id in CRITERIA {
        let r = run(id).expect("criterion id is valid");
        println!("{r}");
        if !r.passed {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: {} of {} criteria passed", CRITERIA.len(), CRITERIA.len());
}
