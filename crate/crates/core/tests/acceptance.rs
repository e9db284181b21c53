//! The acceptance gate: every criterion must pass. One line per criterion
//! is printed with the measured values (visible with --nocapture).

use coupled_cavities::validate;

#[test]
fn acceptance_criteria() {
    let reports = validate::run_all();
    let mut failed = Vec::new();
    for report in &reports {
        println!("{}", report.line());
        if !report.passed {
            failed.push(format!("{}: {}", report.name, report.details));
        }
    }
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
