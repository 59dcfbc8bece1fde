//! Runs the ten acceptance criteria in order and prints one verdict line
//! each. Set CRSBENCH_SEED to change the seed, CRSBENCH_VERBOSE=1 for the
//! detail lines of passing criteria.

use std::process::ExitCode;

use crsbench_core::selftest::{run_criterion, CRITERIA};

fn main() -> ExitCode {
    let seed = std::env::var("CRSBENCH_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(42);
    let verbose = std::env::var("CRSBENCH_VERBOSE").is_ok_and(|v| v == "1");
    println!("acceptance suite, seed {seed}");
    let mut failed = 0;
    let mut total = std::time::Duration::ZERO;
    for &(id, _) in CRITERIA.iter() {
        let r = run_criterion(id, seed).expect("known criterion id");
        total += r.elapsed;
        println!("{} ({:.1}s)", r.verdict_line(), r.elapsed.as_secs_f64());
        if verbose || !r.pass {
            for line in &r.lines {
                println!("    {line}");
            }
        }
        failed += (!r.pass) as usize;
    }
    let in_budget = total.as_secs() < 600;
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s{}",
        CRITERIA.len() - failed,
        CRITERIA.len(),
        total.as_secs_f64(),
        if in_budget { "" } else { " (over the 10 minute budget)" }
    );
    if failed == 0 && in_budget {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
