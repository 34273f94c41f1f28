//! The ten acceptance criteria at their stated tolerances, one line each.

use sgve_cli::run_criterion;

const TOL: f64 = 1e-9;

#[test]
fn acceptance_criteria() {
    let reports: Vec<_> = (1..=10).map(|id| run_criterion(id, TOL)).collect();
    for r in &reports {
        println!("{}", r.summary());
    }
    let failed: Vec<_> = reports.iter().filter(|r| !r.pass()).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:#?}");
}
