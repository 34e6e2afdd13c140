use mallows_lab::validate::{run_criterion, CRITERIA};

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    for id in 1..=CRITERIA {
        let r = run_criterion(id).expect("known criterion");
        println!(
            "criterion {:>2} {} ({:.1} s): {}  {}",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.seconds,
            r.name,
            r.details
        );
        if !r.passed {
            failed.push(r.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
