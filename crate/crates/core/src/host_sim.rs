//! Deterministic virtual host. Applies action effects to an immutable
//! state snapshot and checks the resulting delta against a profile.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action_parser::{ActionIr, ActionKind, FirewallDirection, InterfaceClass, ServiceOp};
use crate::elevation::EffectiveVerdict;
use crate::paths::{self, DomainTable, PersistenceDomain};
use crate::plan_model::{
    BoundaryProfile, DependencyPolicy, ExposureCeiling, PersistenceCeiling, Plan, PrivilegeCeiling,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub exists: bool,
    pub persistence_domain: PersistenceDomain,
    pub mode_wide: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Bind {
    pub address_class: InterfaceClass,
    pub port: u16,
    #[serde(default)]
    pub tunnel: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Package {
    pub manager: String,
    pub name: String,
    pub system_wide: bool,
    pub repository: Option<String>,
    #[serde(default)]
    pub registry: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceState {
    pub running: bool,
    pub enabled: bool,
}

/// Firewall openings: `None` stands for a blanket rule (policy accept,
/// firewall disabled).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostState {
    #[serde(default)]
    pub fs: BTreeMap<String, FileEntry>,
    #[serde(default)]
    pub binds: BTreeSet<Bind>,
    #[serde(default)]
    pub firewall_open: BTreeSet<Option<u16>>,
    #[serde(default)]
    pub packages: BTreeSet<Package>,
    #[serde(default)]
    pub services: BTreeMap<String, ServiceState>,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("host fixture is not valid: {0}")]
    Format(#[from] serde_json::Error),
    #[error("host fixture path {0:?} is not absolute and normalized")]
    BadPath(String),
}

impl HostState {
    pub fn from_json(text: &str) -> Result<HostState, FixtureError> {
        let state: HostState = serde_json::from_str(text)?;
        if let Some(bad) = state.fs.keys().find(|p| !paths::is_normalized_absolute(p)) {
            return Err(FixtureError::BadPath(bad.clone()));
        }
        Ok(state)
    }

    fn exists(&self, path: &str) -> bool {
        self.fs.get(path).is_some_and(|e| e.exists)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceTransition {
    pub service: String,
    pub from: ServiceState,
    pub to: ServiceState,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDelta {
    pub created: BTreeMap<String, PersistenceDomain>,
    pub modified: BTreeMap<String, PersistenceDomain>,
    pub deleted: BTreeMap<String, PersistenceDomain>,
    /// Paths whose mode became world-writable.
    pub permission_widened: BTreeSet<String>,
    pub new_binds: BTreeSet<Bind>,
    pub new_firewall_opens: BTreeSet<Option<u16>>,
    pub new_packages: BTreeSet<Package>,
    pub service_transitions: Vec<ServiceTransition>,
    /// Raw text of actions whose effects are not modelled.
    pub unmodeled: Vec<String>,
}

impl StateDelta {
    pub fn is_empty(&self) -> bool {
        self == &StateDelta::default()
    }

    /// Changed path counts per persistence domain.
    pub fn size_by_domain(&self) -> BTreeMap<PersistenceDomain, usize> {
        let mut out = BTreeMap::new();
        for d in self.created.values().chain(self.modified.values()).chain(self.deleted.values()) {
            *out.entry(*d).or_insert(0) += 1;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CeilingViolation {
    pub field: String,
    pub detail: String,
}

/// Applies a step's actions in order. Pure: the result depends only on the
/// arguments.
pub fn apply_step(state: &HostState, actions: &[ActionIr], table: &DomainTable) -> (HostState, StateDelta) {
    let mut next = state.clone();
    let mut delta = StateDelta::default();
    // Domain a path was last written with, for paths this step wrote.
    let mut written: BTreeMap<String, PersistenceDomain> = BTreeMap::new();
    let mut touched: BTreeSet<String> = BTreeSet::new();
    let mut chmodded: BTreeSet<String> = BTreeSet::new();

    let mut write = |next: &mut HostState, path: &str, domain: PersistenceDomain, touched: &mut BTreeSet<String>| {
        let entry = next.fs.entry(path.to_string()).or_insert(FileEntry {
            exists: false,
            persistence_domain: domain,
            mode_wide: false,
        });
        if !entry.exists {
            entry.persistence_domain = domain;
        }
        entry.exists = true;
        written.insert(path.to_string(), domain);
        touched.insert(path.to_string());
    };

    for action in actions {
        match &action.kind {
            ActionKind::FileWrite(f) => write(&mut next, &f.path, table.domain_of(&f.path), &mut touched),
            ActionKind::ConfigEdit(c) => write(&mut next, &c.path, c.persistence_domain, &mut touched),
            ActionKind::Download(d) => {
                if let Some(target) = &d.target_path {
                    write(&mut next, target, table.domain_of(target), &mut touched);
                }
                if d.executed_inline {
                    delta.unmodeled.push(format!("downloaded script executed: {}", d.url));
                }
            }
            ActionKind::FileDelete(f) => {
                let doomed: Vec<String> = next
                    .fs
                    .iter()
                    .filter(|(p, e)| e.exists && (p.as_str() == f.path || (f.recursive && paths::is_under(p, &f.path))))
                    .map(|(p, _)| p.clone())
                    .collect();
                for p in doomed {
                    if let Some(e) = next.fs.get_mut(&p) {
                        e.exists = false;
                    }
                    touched.insert(p);
                }
            }
            ActionKind::FileRead(_) => {}
            ActionKind::Exec(e) => {
                if let Some(perm) = e.permission.as_ref().filter(|p| p.tool == "chmod" && p.mode.is_some()) {
                    for target in &perm.targets {
                        let hits: Vec<String> = next
                            .fs
                            .iter()
                            .filter(|(p, e)| e.exists && (*p == target || (perm.recursive && paths::is_under(p, target))))
                            .map(|(p, _)| p.clone())
                            .collect();
                        for p in hits {
                            let entry = next.fs.get_mut(&p).expect("listed above");
                            entry.mode_wide = perm.wide;
                            chmodded.insert(p);
                        }
                    }
                }
            }
            ActionKind::NetBind(b) => {
                let bind = Bind { address_class: b.interface_class, port: b.port, tunnel: b.tunnel };
                if next.binds.insert(bind.clone()) {
                    delta.new_binds.insert(bind);
                }
            }
            ActionKind::FirewallChange(f) => match f.direction {
                FirewallDirection::Open => {
                    if next.firewall_open.insert(f.target_port) {
                        delta.new_firewall_opens.insert(f.target_port);
                    }
                }
                FirewallDirection::Close => {
                    next.firewall_open.remove(&f.target_port);
                    delta.new_firewall_opens.remove(&f.target_port);
                }
            },
            ActionKind::PackageInstall(p) => {
                for name in &p.packages {
                    let pkg = Package {
                        manager: p.manager.clone(),
                        name: name.clone(),
                        system_wide: p.system_wide,
                        repository: p.added_repository.clone(),
                        registry: p.registry.clone(),
                    };
                    if next.packages.insert(pkg.clone()) {
                        delta.new_packages.insert(pkg);
                    }
                }
            }
            ActionKind::ServiceControl(s) => {
                let from = next.services.get(&s.service).copied().unwrap_or_default();
                let mut to = from;
                match s.op {
                    ServiceOp::Start | ServiceOp::Restart | ServiceOp::ForceRestart => to.running = true,
                    ServiceOp::Stop => to.running = false,
                    ServiceOp::Enable => to.enabled = true,
                    ServiceOp::Disable => to.enabled = false,
                }
                if to != from {
                    next.services.insert(s.service.clone(), to);
                    delta.service_transitions.push(ServiceTransition { service: s.service.clone(), from, to });
                }
            }
            ActionKind::Unknown(u) => delta.unmodeled.push(u.raw.clone()),
        }
    }

    for path in touched {
        let before = state.exists(&path);
        let after = next.exists(&path);
        let domain = written.get(&path).copied().unwrap_or_else(|| next.fs[&path].persistence_domain);
        match (before, after) {
            (false, true) => {
                delta.created.insert(path, domain);
            }
            (true, false) => {
                let domain = table.domain_of(&path);
                delta.deleted.insert(path, domain);
            }
            (true, true) if written.contains_key(&path) => {
                delta.modified.insert(path, domain);
            }
            _ => {}
        }
    }
    for path in chmodded {
        let was = state.fs.get(&path).is_some_and(|e| e.exists && e.mode_wide);
        if next.fs[&path].mode_wide && !was {
            delta.permission_widened.insert(path);
        }
    }
    (next, delta)
}

fn persistence_needed(domain: PersistenceDomain) -> Option<PersistenceCeiling> {
    match domain {
        PersistenceDomain::Ephemeral => None,
        PersistenceDomain::Workspace => Some(PersistenceCeiling::Workspace),
        PersistenceDomain::UserProfile | PersistenceDomain::System => Some(PersistenceCeiling::System),
    }
}

/// One violation per delta element that goes beyond the profile.
pub fn check_ceilings(delta: &StateDelta, profile: &BoundaryProfile) -> Vec<CeilingViolation> {
    let mut out = Vec::new();
    let mut flag = |field: &str, detail: String| out.push(CeilingViolation { field: field.to_string(), detail });
    let persistence = profile.persistence_ceiling;

    for (verb, paths) in [("created", &delta.created), ("modified", &delta.modified)] {
        for (path, domain) in paths {
            if persistence_needed(*domain).is_some_and(|need| persistence < need) {
                flag("persistence_ceiling", format!("{verb} {domain:?} path {path} under {persistence:?}"));
            }
        }
    }
    for (path, domain) in &delta.deleted {
        // Workspace deletions are judged by the destructive policy.
        if matches!(domain, PersistenceDomain::UserProfile | PersistenceDomain::System)
            && persistence < PersistenceCeiling::System
        {
            flag("persistence_ceiling", format!("deleted {domain:?} path {path} under {persistence:?}"));
        }
    }
    for path in &delta.permission_widened {
        if profile.privilege_ceiling < PrivilegeCeiling::Elevated {
            flag("privilege_ceiling", format!("{path} made world-writable under {:?}", profile.privilege_ceiling));
        }
    }
    let exposure = profile.exposure_ceiling;
    for b in &delta.new_binds {
        let need = if b.tunnel {
            ExposureCeiling::Public
        } else {
            match b.address_class {
                InterfaceClass::Loopback => ExposureCeiling::NoNetwork,
                InterfaceClass::Private => ExposureCeiling::PrivateNet,
                InterfaceClass::Public | InterfaceClass::Wildcard => ExposureCeiling::Public,
            }
        };
        if exposure < need {
            let what = if b.tunnel { "tunnel".to_string() } else { format!("{:?} bind", b.address_class) };
            flag("exposure_ceiling", format!("{what} on port {} under {exposure:?}", b.port));
        }
    }
    for port in &delta.new_firewall_opens {
        if exposure < ExposureCeiling::Public {
            let port = port.map(|p| p.to_string()).unwrap_or_else(|| "all".into());
            flag("exposure_ceiling", format!("firewall opened for {port} under {exposure:?}"));
        }
    }
    for p in &delta.new_packages {
        if p.system_wide && persistence < PersistenceCeiling::System {
            flag("persistence_ceiling", format!("system package {} under {persistence:?}", p.name));
        }
        let dep = &profile.dependency_policy;
        let violates = match (&p.repository, dep) {
            (_, DependencyPolicy::Forbid) => true,
            (Some(_), other) => *other != DependencyPolicy::Any,
            (None, DependencyPolicy::AllowlistedRegistries(list)) => !list.contains(&p.registry),
            (None, _) => false,
        };
        if violates {
            let source = p.repository.as_deref().unwrap_or(&p.registry);
            flag("dependency_policy", format!("package {} from {source} under {}", p.name, dep.name()));
        }
    }
    for t in &delta.service_transitions {
        if t.to.enabled && !t.from.enabled && persistence < PersistenceCeiling::System {
            flag("persistence_ceiling", format!("service {} enabled at boot under {persistence:?}", t.service));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportedViolation {
    pub step_index: usize,
    pub field: String,
    pub detail: String,
    pub human_override: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome")]
pub enum StepOutcome {
    Executed { delta: Box<StateDelta>, human_override: bool },
    Skipped { verdict: EffectiveVerdict },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepExecution {
    pub step_index: usize,
    #[serde(flatten)]
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub final_state: HostState,
    pub steps: Vec<StepExecution>,
    pub skipped: Vec<usize>,
    pub violations: Vec<ReportedViolation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("steps still awaiting elevation: {0:?}")]
    UnresolvedElevation(Vec<usize>),
    #[error("{verdicts} effective verdicts for {steps} steps")]
    VerdictCount { steps: usize, verdicts: usize },
}

/// Runs the steps whose effective verdict allows execution, in order.
pub fn run_plan(
    state: &HostState,
    plan: &Plan,
    effective: &[EffectiveVerdict],
    profile: &BoundaryProfile,
    table: &DomainTable,
) -> Result<ExecutionReport, SimError> {
    if effective.len() != plan.steps.len() {
        return Err(SimError::VerdictCount { steps: plan.steps.len(), verdicts: effective.len() });
    }
    let pending: Vec<usize> = plan
        .steps
        .iter()
        .zip(effective)
        .filter(|(_, v)| **v == EffectiveVerdict::Pending)
        .map(|(s, _)| s.index)
        .collect();
    if !pending.is_empty() {
        return Err(SimError::UnresolvedElevation(pending));
    }
    let mut current = state.clone();
    let mut report = ExecutionReport { final_state: HostState::default(), steps: vec![], skipped: vec![], violations: vec![] };
    for (step, verdict) in plan.steps.iter().zip(effective) {
        if !verdict.runs() {
            report.skipped.push(step.index);
            report.steps.push(StepExecution { step_index: step.index, outcome: StepOutcome::Skipped { verdict: *verdict } });
            continue;
        }
        let human_override = *verdict == EffectiveVerdict::ApprovedOverride;
        let (next, delta) = apply_step(&current, &step.actions, table);
        for v in check_ceilings(&delta, profile) {
            report.violations.push(ReportedViolation { step_index: step.index, field: v.field, detail: v.detail, human_override });
        }
        report.steps.push(StepExecution { step_index: step.index, outcome: StepOutcome::Executed { delta: Box::new(delta), human_override } });
        current = next;
    }
    report.final_state = current;
    Ok(report)
}
