//! Runs every acceptance criterion and prints one line per criterion.
//! Exits nonzero if any criterion fails.

use std::process::ExitCode;

use robustbf_bench::acceptance::{run_criterion, CRITERIA};

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut failed = 0;
    for (id, _) in CRITERIA {
        let outcome = run_criterion(id, dir.path());
        println!("{outcome}");
        if !outcome.passed {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        CRITERIA.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
