//! Runs the full acceptance suite as a test target. Every criterion prints
//! one pass/fail line with its measured quantities; the test fails if any
//! criterion does, quoting each failing detail so the numbers travel with
//! the failure.

use mppi_lab::acceptance::{run_all, AcceptanceOptions};

#[test]
fn acceptance_criteria() {
    let reports = run_all(&AcceptanceOptions::default()).expect("suite runs to completion");
    for r in &reports {
        println!(
            "[{}] {} ({:.1} s): {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.runtime_s,
            r.detail
        );
    }
    let failed: Vec<_> = reports.iter().filter(|r| !r.passed).collect();
    assert!(
        failed.is_empty(),
        "{} of {} acceptance criteria failed:\n{}",
        failed.len(),
        reports.len(),
        failed
            .iter()
            .map(|r| format!("- {}: {}", r.name, r.detail))
            .collect::<Vec<_>>()
            .join("\n")
    );
}
