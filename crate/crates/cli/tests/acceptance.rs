//! Runs every acceptance criterion at full scale, one line per criterion.
//! Numeric arguments restrict the run to those criteria.

use modalbridge_cli::validation::{run_criterion, Options, CRITERIA};

fn main() {
    let only: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let opts = Options::full();
    let mut failed = Vec::new();
    let mut ran = 0;
    for &(id, _, _) in &CRITERIA {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let r = run_criterion(id, &opts);
        println!("{}", r.line());
        ran += 1;
        if !r.passed() {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {ran} criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
