//! The verification gate: every headline result at its stated tolerance,
//! one pass/fail line per criterion.

use mbep_core::acceptance::run_all;

#[test]
fn acceptance_suite() {
    let results = run_all();
    let mut failures = 0;
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{}] {}: {}", r.id, status, r.name, r.details);
        if !r.passed {
            failures += 1;
        }
    }
    assert_eq!(failures, 0, "{failures} acceptance criteria failed");
}
