//! One PASS/FAIL line per acceptance criterion; exits nonzero on any failure.

use qsep::acceptance::run_suite;
use qsep::report::Format;

const MASTER_SEED: u64 = 20_240_601;

fn main() {
    let suite = run_suite(MASTER_SEED, Format::Json, |o| {
        println!("{}", o.line());
        if !o.pass() {
            for r in o.rows.iter().filter(|r| !r.pass) {
                println!("    failing row: {} measured={:e} bound={:?} tol={:e} {}", r.experiment, r.measured, r.bound, r.tolerance, r.params_json);
            }
        }
    })
    .expect("acceptance suite failed to run");
    println!("{}", suite.determinism_line());
    let failed = suite.outcomes.iter().filter(|o| !o.pass()).count() + usize::from(!suite.deterministic);
    println!("acceptance: {} of 15 criteria pass", 15 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
