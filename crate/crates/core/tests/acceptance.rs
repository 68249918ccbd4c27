//! The twelve acceptance criteria at their stated tolerances, one line each.
//! Runs without the test harness so the lines are printed on success too.

use alpha_lab::suite::{run_criterion, summary_table, CriterionResult, Tolerances, DEFAULT_SEED};

fn stated_tolerances() -> Tolerances {
    let tol = Tolerances::default();
    let stated = [
        ("threshold", 0.02),
        ("threshold_seconds", 60.0),
        ("ratio_sigmas", 3.0),
        ("pointwise", 1e-12),
        ("disc_relative", 0.01),
        ("equivariance", 1e-9),
        ("invariance", 1e-10),
        ("reconstruction", 1e-8),
        ("vertex_approach", 1e-3),
    ];
    for (name, value) in stated {
        assert_eq!(tol.get(name), value, "default for {name} drifted");
    }
    tol
}

fn acceptance_suite() {
    let tol = stated_tolerances();
    let mut results: Vec<CriterionResult> = Vec::new();
    for id in 1..=12 {
        let r = run_criterion(id, DEFAULT_SEED, &tol).unwrap();
        println!(
            "criterion {:>2} {} {}: {} ({:.1}s)",
            r.id,
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.summary,
            r.seconds
        );
        results.push(r);
    }
    let threshold = &results[0];
    assert!(threshold.seconds < 60.0, "threshold estimate took {:.1}s", threshold.seconds);
    let error = threshold.details["error"].as_f64().unwrap();
    assert!(error <= 0.02, "threshold error {error}");
    assert_eq!(threshold.details["predicted"], "5/6");

    let failed: Vec<_> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria {failed:?}\n{}", summary_table(&results, true));
}

fn suite_is_deterministic_for_a_seed() {
    let tol = Tolerances::default();
    for id in [5, 6, 12] {
        let a = serde_json::to_string(&run_criterion(id, 7, &tol).unwrap()).unwrap();
        let b = serde_json::to_string(&run_criterion(id, 7, &tol).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

fn tolerance_overrides_are_validated() {
    let mut tol = Tolerances::default();
    assert!(tol.set("threshold", -0.1).is_err());
    assert!(tol.set("threshold", 0.0).is_err());
    assert!(tol.set("nonexistent", 1.0).is_err());
    tol.set("threshold", 0.05).unwrap();
    assert_eq!(tol.get("threshold"), 0.05);
    assert!(run_criterion(13, 0, &tol).is_err());
}

fn main() {
    tolerance_overrides_are_validated();
    suite_is_deterministic_for_a_seed();
    acceptance_suite();
    println!("acceptance: all 12 criteria passed");
}
