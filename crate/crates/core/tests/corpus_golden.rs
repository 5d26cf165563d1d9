use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use bgate_core::corpus::{load_dir, run_scenario};
use bgate_core::plan_model::{Decision, RiskClass};
use bgate_core::Engine;

fn corpus_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus"))
}

#[test]
fn bundled_scenarios_match_expected_classes() {
    let start = Instant::now();
    let scenarios = load_dir(corpus_dir()).unwrap();
    assert_eq!(scenarios.len(), 3);
    let engine = Engine::default();
    for s in &scenarios {
        let r = run_scenario(&engine, s).unwrap();
        assert!(r.passed, "{}: {:?}", s.name, r.failure());
        assert!(r.conservative_verdict <= Decision::Elevate);
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn expected_sets_are_the_table_rows() {
    use RiskClass::*;
    let by_name = |n: &str| load_dir(corpus_dir()).unwrap().into_iter().find(|s| s.name == n).unwrap().expected.risky_classes;
    assert_eq!(by_name("env-setup"), BTreeSet::from([PrivilegeExpansion, PersistentHostModification, UnsafeDependencyIntroduction]));
    assert_eq!(by_name("service-exposure"), BTreeSet::from([ExposureEnlargement, PersistentHostModification]));
    assert_eq!(by_name("fault-repair"), BTreeSet::from([DestructiveRepair, PrivilegeExpansion, SensitiveResourceOverreach]));
}
