//! Acceptance gate: one `[PASS]`/`[FAIL]` line per criterion.

mod common;

use common::criteria::{self, Check};
use common::fixture;

fn report(id: &str, title: &str, outcome: Check, failures: &mut Vec<String>) {
    match outcome {
        Ok(detail) => println!("[PASS] {id} {title}: {detail}"),
        Err(why) => {
            println!("[FAIL] {id} {title}: {why}");
            failures.push(id.to_string());
        }
    }
}

#[test]
fn acceptance_criteria() {
    let mut failures = Vec::new();
    report("C1", "budgeted policy vs oracle", criteria::s1_oracle_equivalence(50, 101), &mut failures);
    report("C2", "decomposition identities", criteria::decomposition_identities(20, 102), &mut failures);
    report("C3", "penalty exactness and relaxation ordering", criteria::penalty_exactness(20, 103), &mut failures);
    report("C4", "adjustment policy vs oracle", criteria::s2_oracle_equivalence(50, 104), &mut failures);
    report("C5", "cost-capped values vs enumeration", criteria::s3_enumeration(20, 105), &mut failures);

    let psps = fixture::psps();
    report("C9", "performance", criteria::performance(&psps), &mut failures);

    let cpp = fixture::cpp();
    let cpp_outcome = criteria::cpp_run(&cpp, 100);
    let c6 = cpp_outcome
        .as_ref()
        .map_err(Clone::clone)
        .and_then(|run| criteria::cpp_threshold_identity(10_000, 106, run, cpp.params.budget()));
    report("C6", "critical-peak threshold identity and budget", c6, &mut failures);

    let c7 = criteria::psps_run(&psps, 100).and_then(|run| criteria::psps_structure(&run, psps.budget));
    report("C7", "shutoff fixture structure", c7, &mut failures);

    let c8 = cpp_outcome.and_then(|run| criteria::cpp_wins(&run, 90));
    report("C8", "critical-peak fixture wins", c8, &mut failures);

    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
