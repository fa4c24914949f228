use std::process::ExitCode;
use std::time::Instant;

use pcyl_validation::CRITERIA;

fn main() -> ExitCode {
    let start = Instant::now();
    let mut failed = 0;
    for criterion in CRITERIA {
        let outcome = criterion();
        println!("{}", outcome.line());
        if !outcome.passed {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1?}",
        CRITERIA.len() - failed,
        CRITERIA.len(),
        start.elapsed()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
