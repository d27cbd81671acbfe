use cograph_core::gradcheck::{run_suite, GradcheckConfig};

#[test]
fn every_rule_matches_central_differences() {
    let report = run_suite(&GradcheckConfig::default()).unwrap();
    for c in &report.checks {
        println!(
            "{:<34} inst {:>2} checked {:>6} skipped {:>4} max rel {:.3e} {}",
            c.name, c.instances, c.stats.checked, c.stats.skipped, c.stats.max_rel_error,
            if c.passed { "ok" } else { "FAIL" }
        );
    }
    assert!(report.passed());
    assert!(report.checks.iter().all(|c| c.instances >= 2));
}

#[test]
fn suite_is_stable_across_seeds() {
    for seed in 1..=8 {
        let cfg = GradcheckConfig { seed, instances: 5, full_size_instances: 1, full_size_entries: 40, ..Default::default() };
        let report = run_suite(&cfg).unwrap();
        for c in &report.checks {
            assert!(c.passed, "seed {seed}: {c:?}");
        }
    }
}
