//! Runs every acceptance criterion and prints one line per criterion.
//! Set `ODL_ACCEPTANCE_SCALE=desk` to skip the full-scale comparisons.

use odl::exec::Executor;
use odl::validation::{run_suite, SuiteOptions};

fn main() {
    let full_scale = std::env::var("ODL_ACCEPTANCE_SCALE").map_or(true, |v| v != "desk");
    let exec = Executor::new(0).expect("worker pool");
    let reports = run_suite(SuiteOptions { full_scale }, &exec, |r| println!("{}", r.line()));
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| format!("{} ({})", r.id, r.title)).collect();
    println!(
        "acceptance: {} of {} checks passed",
        reports.len() - failed.len(),
        reports.len()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
