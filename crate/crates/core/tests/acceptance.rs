//! One PASS/FAIL line per acceptance criterion; exits nonzero on any failure.

use std::process::ExitCode;

use eft_core::acceptance::{self, Check};

fn main() -> ExitCode {
    let suite: [fn() -> Check; 9] = [
        acceptance::criterion_threshold,
        acceptance::ground_state_oracle,
        acceptance::test_function_band,
        acceptance::end_to_end_extinction,
        acceptance::energy_dissipation,
        acceptance::closed_form_bound,
        acceptance::orlicz_suite,
        acceptance::sphi_calculus,
        acceptance::sum_integral_equivalence,
    ];
    // timed criteria run alone so their budgets measure their own work
    let checks: Vec<Check> = suite.iter().map(|f| f()).collect();
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
