mod support;

use std::sync::Arc;

use bgate_core::elevation::{
    EffectiveVerdict, ElevationDecision, ElevationError, ElevationRegistry, ElevationState, ManualClock,
};
use bgate_core::host_sim::{run_plan, HostState};
use bgate_core::plan_model::{BoundaryProfile, Decision, Strictness};
use bgate_core::Engine;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use support::plan_of;

const ELEVATING: &[&str] = &[
    "sudo apt-get install -y nginx",
    "pip install requests",
    "python3 app.py --host 192.168.1.20 --port 8000",
    "rm -rf build",
    "frobnicate --all",
    "systemctl enable --now app",
];

#[test]
fn unanswered_requests_expire_and_their_steps_are_skipped() {
    let mut rng = StdRng::seed_from_u64(0xe1e);
    let engine = Engine::default();
    let mut total = 0;
    for round in 0..200 {
        let mut profile = BoundaryProfile::preset(Strictness::Standard);
        profile.confirmation_timeout_s = rng.gen_range(1..300);
        let start = rng.gen_range(0..1u64 << 40);
        let clock = Arc::new(ManualClock::new(start));
        let mut registry = ElevationRegistry::new(clock.clone());
        let mut steps: Vec<String> = (0..rng.gen_range(1..5)).map(|_| ELEVATING[rng.gen_range(0..ELEVATING.len())].to_string()).collect();
        steps.push("ls".into());
        let plan = engine.annotate(&plan_of(&format!("x{round}"), &steps), &profile).unwrap();
        let mut ids = Vec::new();
        for s in &plan.steps {
            if s.step.verdict.as_ref().unwrap().decision == Decision::Elevate {
                let r = registry.open_request("sess", &plan.plan_id, &s.step, &profile, s.explanation.clone()).unwrap();
                assert_eq!(r.deadline, start + profile.confirmation_timeout_s * 1000);
                ids.push(r.elevation_id);
            }
        }
        assert!(!ids.is_empty(), "round {round}: {steps:?}");
        let deadline = start + profile.confirmation_timeout_s * 1000;

        // Anything short of the deadline leaves requests pending.
        clock.set(rng.gen_range(start..deadline));
        assert!(registry.expire_due().is_empty());
        assert_eq!(registry.list(Some(ElevationState::Pending)).len(), ids.len());

        clock.set(deadline + rng.gen_range(0..5_000));
        if rng.gen_bool(0.5) {
            assert_eq!(registry.expire_due().len(), ids.len());
        }
        // A late approval cannot revive an expired request.
        let late = registry.decide(&ids[0], ElevationDecision::Approve, "alice", "");
        assert!(matches!(late, Err(ElevationError::AlreadySettled { state: ElevationState::Expired, .. })), "{late:?}");
        registry.expire_due();
        assert_eq!(registry.list(Some(ElevationState::Expired)).len(), ids.len());
        assert!(registry.list(Some(ElevationState::Approved)).is_empty());

        let effective: Vec<EffectiveVerdict> = plan
            .steps
            .iter()
            .map(|s| {
                let req = registry.for_step("sess", &plan.plan_id, s.step.index);
                EffectiveVerdict::from_decision(s.step.verdict.as_ref().unwrap().decision, req)
            })
            .collect();
        let report = run_plan(&HostState::default(), &plan.to_plan(), &effective, &profile, engine.domain_table()).unwrap();
        for s in &plan.steps {
            let decision = s.step.verdict.as_ref().unwrap().decision;
            assert_eq!(report.skipped.contains(&s.step.index), decision != Decision::Allow);
        }
        assert!(report.violations.is_empty());
        total += ids.len();
    }
    assert!(total >= 200);
}
