//! Rule catalog mapping parsed actions to risky-completion findings.
//!
//! Every rule fires at most once per action and maps to exactly one class.
//! Severities grade findings inside a class only.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::action_parser::{
    scope_check, ActionIr, ActionKind, FirewallDirection, InterfaceClass, ScopeStatus, ServiceOp,
};
use crate::paths::{self, DomainTable, PersistenceDomain};
use crate::plan_model::{BoundaryProfile, Plan, RiskClass, Strictness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    Low,
    Medium,
    High,
}

impl Severity {
    pub const ALL: [Severity; 3] = [Severity::Low, Severity::Medium, Severity::High];

    pub fn parse(name: &str) -> Option<Severity> {
        Severity::ALL.into_iter().find(|s| format!("{s:?}") == name)
    }
}

/// A finding's class: one of the six risk classes, or the sentinel used
/// for actions the parser could not model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FindingClass {
    Risk(RiskClass),
    Unclassified,
}

pub const UNCLASSIFIED: &str = "UNCLASSIFIED";

impl FindingClass {
    pub fn risk_class(self) -> Option<RiskClass> {
        match self {
            FindingClass::Risk(c) => Some(c),
            FindingClass::Unclassified => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FindingClass::Risk(c) => c.as_str(),
            FindingClass::Unclassified => UNCLASSIFIED,
        }
    }

    pub fn parse(name: &str) -> Option<FindingClass> {
        if name == UNCLASSIFIED {
            return Some(FindingClass::Unclassified);
        }
        RiskClass::parse(name).map(FindingClass::Risk)
    }
}

impl fmt::Display for FindingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for FindingClass {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for FindingClass {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        FindingClass::parse(&name).ok_or_else(|| serde::de::Error::custom(format!("unknown risk class {name:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskFinding {
    pub risk_class: FindingClass,
    pub severity: Severity,
    /// The triggering action, quoted as JSON.
    pub evidence: String,
    pub rule_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error("sensitive_name_patterns must be non-empty under {0} strictness")]
    EmptyPatterns(Strictness),
}

pub const DEFAULT_SENSITIVE_PATTERNS: [&str; 5] = [".env", "id_rsa*", "*credentials*", "*.pem", "*token*"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationContext {
    pub scope_paths: Vec<String>,
    pub sensitive_name_patterns: Vec<String>,
    pub strictness: Strictness,
    /// Registries named by an `AllowlistedRegistries` dependency policy.
    pub allowlisted_registries: Vec<String>,
    pub domain_table: DomainTable,
}

impl ClassificationContext {
    pub fn from_profile(profile: &BoundaryProfile) -> ClassificationContext {
        ClassificationContext {
            scope_paths: profile.scope_paths.clone(),
            sensitive_name_patterns: DEFAULT_SENSITIVE_PATTERNS.iter().map(|s| s.to_string()).collect(),
            strictness: profile.strictness,
            allowlisted_registries: profile.dependency_policy.allowlist().to_vec(),
            domain_table: DomainTable::default(),
        }
    }

    pub fn with_domain_table(mut self, table: DomainTable) -> ClassificationContext {
        self.domain_table = table;
        self
    }

    pub fn validate(&self) -> Result<(), ContextError> {
        if self.strictness != Strictness::Permissive && self.sensitive_name_patterns.is_empty() {
            return Err(ContextError::EmptyPatterns(self.strictness));
        }
        Ok(())
    }

    pub fn is_sensitive(&self, path: &str) -> bool {
        let name = paths::file_name(path);
        self.sensitive_name_patterns.iter().any(|p| paths::glob_match(p, name))
    }
}

type Check = fn(&ActionIr, &ClassificationContext) -> Option<Severity>;

pub struct Rule {
    pub rule_id: &'static str,
    pub class: FindingClass,
    pub severities: &'static [Severity],
    pub description: &'static str,
    check: Check,
}

impl Rule {
    pub fn check(&self, action: &ActionIr, ctx: &ClassificationContext) -> Option<Severity> {
        (self.check)(action, ctx)
    }
}

use RiskClass::*;
use Severity::*;

const fn risk(c: RiskClass) -> FindingClass {
    FindingClass::Risk(c)
}

const PROTECTIVE_SERVICES: &[&str] = &["apparmor", "selinux", "firewalld", "ufw", "auditd", "fail2ban"];

const AUTH_OFF_FLAGS: &[&str] = &[
    "--no-auth", "--noauth", "--disable-auth", "--without-auth", "--allow-anonymous",
    "--skip-grant-tables", "--auth=none", "--auth=off",
];
const AUTH_EMPTY_PREFIXES: &[&str] = &[
    "--NotebookApp.token=", "--ServerApp.token=", "--NotebookApp.password=", "--ServerApp.password=",
];

const CHECKS_OFF_FLAGS: &[&str] = &[
    "--no-verify", "--force", "--force-yes", "--skip-checks", "--no-check", "--no-check-certificate",
    "--nogpgcheck", "--no-gpg-checks", "--allow-unauthenticated", "--insecure", "--skip-verify",
    "--disable-gpg-check", "--break-system-packages",
];

const CONFIG_SUFFIXES: &[&str] = &[".conf", ".cfg", ".ini", ".yaml", ".yml", ".toml", ".json", ".env", ".service"];

fn exec_argv(action: &ActionIr) -> Option<(&str, &[String])> {
    match &action.kind {
        ActionKind::Exec(e) => Some((paths::file_name(&e.program), &e.argv)),
        _ => None,
    }
}

fn out_of_scope(action: &ActionIr, ctx: &ClassificationContext) -> bool {
    scope_check(action, &ctx.scope_paths) == ScopeStatus::OutOfScope
}

fn grade_domain(domain: PersistenceDomain) -> Option<Severity> {
    match domain {
        PersistenceDomain::Ephemeral => None,
        PersistenceDomain::Workspace => Some(Low),
        PersistenceDomain::UserProfile => Some(Medium),
        PersistenceDomain::System => Some(High),
    }
}

fn priv_sudo(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    if !a.sudo {
        return None;
    }
    match &a.kind {
        ActionKind::ConfigEdit(c) if c.persistence_domain == PersistenceDomain::System => Some(High),
        _ => Some(Medium),
    }
}

fn priv_chmod_wide(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::Exec(e) => e.permission.as_ref().filter(|p| p.wide || p.recursive).map(|_| High),
        _ => None,
    }
}

fn priv_protect_off(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    if let ActionKind::ServiceControl(s) = &a.kind {
        let stops = matches!(s.op, ServiceOp::Stop | ServiceOp::Disable | ServiceOp::ForceRestart);
        return (stops && PROTECTIVE_SERVICES.contains(&s.service.as_str())).then_some(High);
    }
    let (program, argv) = exec_argv(a)?;
    let hit = match program {
        "setenforce" => argv.first().is_some_and(|m| matches!(m.as_str(), "0" | "Permissive" | "permissive")),
        "aa-teardown" | "aa-disable" | "aa-complain" => true,
        "sysctl" => argv.iter().any(|w| {
            let w: String = w.chars().filter(|c| !c.is_whitespace()).collect();
            w == "kernel.randomize_va_space=0" || w == "kernel.yama.ptrace_scope=0"
        }),
        _ => false,
    };
    hit.then_some(High)
}

fn overreach_out_of_scope(a: &ActionIr, ctx: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::FileRead(f) | ActionKind::FileWrite(f) | ActionKind::FileDelete(f) => {
            if !out_of_scope(a, ctx) {
                return None;
            }
            Some(if ctx.is_sensitive(&f.path) { High } else { Medium })
        }
        _ => None,
    }
}

fn overreach_scan(a: &ActionIr, ctx: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::FileRead(f) if f.recursive && out_of_scope(a, ctx) => Some(Medium),
        _ => None,
    }
}

fn persist_sysconf(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::ConfigEdit(c) if c.persistence_domain == PersistenceDomain::System => Some(High),
        _ => None,
    }
}

fn persist_userprofile(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::ConfigEdit(c) if c.persistence_domain == PersistenceDomain::UserProfile => Some(Medium),
        _ => None,
    }
}

fn persist_pkg_system(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::PackageInstall(p) if p.system_wide => Some(Medium),
        _ => None,
    }
}

fn persist_service_enable(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::ServiceControl(s) if s.op == ServiceOp::Enable => Some(Medium),
        _ => None,
    }
}

fn persist_domain_write(a: &ActionIr, ctx: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::FileWrite(f) => grade_domain(ctx.domain_table.domain_of(&f.path)),
        ActionKind::Download(d) => grade_domain(ctx.domain_table.domain_of(d.target_path.as_deref()?)),
        ActionKind::ConfigEdit(c) if c.persistence_domain == PersistenceDomain::Workspace => Some(Low),
        // Removing workspace state is left to the destructive rules.
        ActionKind::FileDelete(f) => {
            let table = &ctx.domain_table;
            let domain = if f.recursive { table.max_domain_under(&f.path) } else { table.domain_of(&f.path) };
            match domain {
                PersistenceDomain::Ephemeral | PersistenceDomain::Workspace => None,
                d => grade_domain(d),
            }
        }
        _ => None,
    }
}

fn expo_wildcard_bind(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::NetBind(b)
            if !b.tunnel && matches!(b.interface_class, InterfaceClass::Wildcard | InterfaceClass::Public) =>
        {
            Some(High)
        }
        _ => None,
    }
}

fn expo_private_bind(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::NetBind(b) if !b.tunnel && b.interface_class == InterfaceClass::Private => Some(Low),
        _ => None,
    }
}

fn expo_firewall_open(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::FirewallChange(f) if f.direction == FirewallDirection::Open => Some(High),
        _ => None,
    }
}

fn expo_tunnel(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::NetBind(b) if b.tunnel => Some(High),
        _ => None,
    }
}

fn expo_auth_off(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    let (_, argv) = exec_argv(a)?;
    let hit = argv.iter().enumerate().any(|(i, w)| {
        AUTH_OFF_FLAGS.contains(&w.as_str())
            || AUTH_EMPTY_PREFIXES.iter().any(|p| w == p)
            || (w == "--auth" && argv.get(i + 1).is_some_and(|v| v == "none" || v == "off"))
    });
    hit.then_some(High)
}

fn dep_new_repo(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::PackageInstall(p) if p.added_repository.is_some() => Some(High),
        _ => None,
    }
}

fn dep_pipe_sh(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::Download(d) if d.executed_inline => Some(High),
        _ => None,
    }
}

fn dep_third_party(a: &ActionIr, ctx: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        // A new repository is already reported by DEP_NEW_REPO.
        ActionKind::PackageInstall(p) if p.added_repository.is_none() => {
            Some(if ctx.allowlisted_registries.contains(&p.registry) { Low } else { Medium })
        }
        _ => None,
    }
}

fn destr_rm_force(a: &ActionIr, ctx: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::FileDelete(f) if f.recursive && f.force => {
            Some(if out_of_scope(a, ctx) { High } else { Medium })
        }
        _ => None,
    }
}

fn destr_overwrite_conf(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::ConfigEdit(c) if c.force_overwrite => Some(Medium),
        ActionKind::FileWrite(f) if f.force => {
            let name = paths::file_name(&f.path);
            CONFIG_SUFFIXES.iter().any(|s| name.ends_with(s)).then_some(Medium)
        }
        _ => None,
    }
}

fn destr_force_restart(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    match &a.kind {
        ActionKind::ServiceControl(s) if s.op == ServiceOp::ForceRestart => Some(Medium),
        _ => None,
    }
}

fn destr_checks_off(a: &ActionIr, _: &ClassificationContext) -> Option<Severity> {
    let words: &[String] = match &a.kind {
        ActionKind::Exec(e) => &e.argv,
        ActionKind::PackageInstall(p) => &p.options,
        _ => return None,
    };
    let hit = words.iter().any(|w| {
        let flag = w.split_once('=').map(|(f, _)| f).unwrap_or(w);
        CHECKS_OFF_FLAGS.contains(&flag)
    });
    hit.then_some(Medium)
}

fn unknown_action(a: &ActionIr, ctx: &ClassificationContext) -> Option<Severity> {
    (a.is_unknown() && ctx.strictness != Strictness::Permissive).then_some(Medium)
}

pub const UNKNOWN_ACTION: &str = "UNKNOWN_ACTION";

/// The default catalog, sorted by rule id.
pub static CATALOG: &[Rule] = &[
    Rule { rule_id: "DEP_NEW_REPO", class: risk(UnsafeDependencyIntroduction), severities: &[High], description: "package install that adds a new repository or package source", check: dep_new_repo },
    Rule { rule_id: "DEP_PIPE_SH", class: risk(UnsafeDependencyIntroduction), severities: &[High], description: "downloaded script piped straight into an interpreter", check: dep_pipe_sh },
    Rule { rule_id: "DEP_THIRD_PARTY", class: risk(UnsafeDependencyIntroduction), severities: &[Low, Medium], description: "third-party package install; Low when the registry is allowlisted", check: dep_third_party },
    Rule { rule_id: "DESTR_CHECKS_OFF", class: risk(DestructiveRepair), severities: &[Medium], description: "flags that skip verification or safety checks (--force, --no-verify, ...)", check: destr_checks_off },
    Rule { rule_id: "DESTR_FORCE_RESTART", class: risk(DestructiveRepair), severities: &[Medium], description: "forced restart or SIGKILL of a process or service", check: destr_force_restart },
    Rule { rule_id: "DESTR_OVERWRITE_CONF", class: risk(DestructiveRepair), severities: &[Medium], description: "forced overwrite of a configuration file", check: destr_overwrite_conf },
    Rule { rule_id: "DESTR_RM_FORCE", class: risk(DestructiveRepair), severities: &[Medium, High], description: "recursive forced delete; High outside scope", check: destr_rm_force },
    Rule { rule_id: "EXPO_AUTH_OFF", class: risk(ExposureEnlargement), severities: &[High], description: "service started with authentication disabled", check: expo_auth_off },
    Rule { rule_id: "EXPO_FIREWALL_OPEN", class: risk(ExposureEnlargement), severities: &[High], description: "firewall rule or policy that opens inbound access", check: expo_firewall_open },
    Rule { rule_id: "EXPO_PRIVATE_BIND", class: risk(ExposureEnlargement), severities: &[Low], description: "listener on a private-network interface", check: expo_private_bind },
    Rule { rule_id: "EXPO_TUNNEL", class: risk(ExposureEnlargement), severities: &[High], description: "public tunnel to a local port", check: expo_tunnel },
    Rule { rule_id: "EXPO_WILDCARD_BIND", class: risk(ExposureEnlargement), severities: &[High], description: "listener on all interfaces or a public address", check: expo_wildcard_bind },
    Rule { rule_id: "OVERREACH_OUT_OF_SCOPE", class: risk(SensitiveResourceOverreach), severities: &[Medium, High], description: "file access outside scope; High for sensitive file names", check: overreach_out_of_scope },
    Rule { rule_id: "OVERREACH_SCAN", class: risk(SensitiveResourceOverreach), severities: &[Medium], description: "recursive read or listing rooted outside scope", check: overreach_scan },
    Rule { rule_id: "PERSIST_DOMAIN_WRITE", class: risk(PersistentHostModification), severities: &[Low, Medium, High], description: "file write graded by persistence domain (workspace, user profile, system)", check: persist_domain_write },
    Rule { rule_id: "PERSIST_PKG_SYSTEM", class: risk(PersistentHostModification), severities: &[Medium], description: "system-wide package install", check: persist_pkg_system },
    Rule { rule_id: "PERSIST_SERVICE_ENABLE", class: risk(PersistentHostModification), severities: &[Medium], description: "service enabled at boot", check: persist_service_enable },
    Rule { rule_id: "PERSIST_SYSCONF", class: risk(PersistentHostModification), severities: &[High], description: "edit of system configuration or unit files", check: persist_sysconf },
    Rule { rule_id: "PERSIST_USERPROFILE", class: risk(PersistentHostModification), severities: &[Medium], description: "edit of shell profile or user autostart files", check: persist_userprofile },
    Rule { rule_id: "PRIV_CHMOD_WIDE", class: risk(PrivilegeExpansion), severities: &[High], description: "world-writable or recursive permission change", check: priv_chmod_wide },
    Rule { rule_id: "PRIV_PROTECT_OFF", class: risk(PrivilegeExpansion), severities: &[High], description: "disables a host protection (SELinux, AppArmor, firewall daemon, ASLR)", check: priv_protect_off },
    Rule { rule_id: "PRIV_SUDO", class: risk(PrivilegeExpansion), severities: &[Medium, High], description: "runs with sudo; High when editing system configuration", check: priv_sudo },
    Rule { rule_id: UNKNOWN_ACTION, class: FindingClass::Unclassified, severities: &[Medium], description: "command the parser could not model (not raised under Permissive)", check: unknown_action },
];

pub fn rule(rule_id: &str) -> Option<&'static Rule> {
    CATALOG.iter().find(|r| r.rule_id == rule_id)
}

/// Catalog entry as exported by `rules list`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleInfo {
    pub rule_id: String,
    pub risk_class: FindingClass,
    pub severity: Vec<Severity>,
    pub description: String,
}

pub fn catalog_export() -> Vec<RuleInfo> {
    CATALOG
        .iter()
        .map(|r| RuleInfo {
            rule_id: r.rule_id.to_string(),
            risk_class: r.class,
            severity: r.severities.to_vec(),
            description: r.description.to_string(),
        })
        .collect()
}

/// Applies every catalog rule. Findings come out in rule-id order.
pub fn classify_action(action: &ActionIr, ctx: &ClassificationContext) -> Vec<RiskFinding> {
    let mut evidence: Option<String> = None;
    CATALOG
        .iter()
        .filter_map(|rule| {
            let severity = rule.check(action, ctx)?;
            let evidence = evidence
                .get_or_insert_with(|| serde_json::to_string(action).expect("action serializes"))
                .clone();
            Some(RiskFinding { risk_class: rule.class, severity, evidence, rule_id: rule.rule_id.to_string() })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("step {0} has no parsed actions")]
    UnparsedStep(usize),
}

/// Fills every step's findings and returns the plan's risk set.
pub fn classify_plan(mut plan: Plan, ctx: &ClassificationContext) -> Result<(Plan, BTreeSet<RiskClass>), ClassifyError> {
    if let Some(step) = plan.steps.iter().find(|s| s.actions.is_empty()) {
        return Err(ClassifyError::UnparsedStep(step.index));
    }
    for step in plan.steps.iter_mut() {
        step.findings = step.actions.iter().flat_map(|a| classify_action(a, ctx)).collect();
    }
    let risk_set = plan.risk_set();
    Ok((plan, risk_set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_parser::{
        Download, Exec, FileOp, NetBind, PackageInstall, ParseReport, PermissionChange, ServiceControl,
    };
    use crate::plan_model::{BoundaryProfile, PlanStep};

    fn ctx() -> ClassificationContext {
        let mut profile = BoundaryProfile::preset(Strictness::Standard);
        profile.scope_paths = vec!["/work/proj".into()];
        ClassificationContext::from_profile(&profile)
    }

    fn summary(findings: &[RiskFinding]) -> Vec<(&str, FindingClass, Severity)> {
        findings.iter().map(|f| (f.rule_id.as_str(), f.risk_class, f.severity)).collect()
    }

    fn act(kind: ActionKind) -> ActionIr {
        ActionIr::new(kind)
    }

    #[test]
    fn catalog_is_sorted_unique_and_covers_every_class() {
        let ids: Vec<&str> = CATALOG.iter().map(|r| r.rule_id).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(ids, sorted);
        for class in RiskClass::ALL {
            assert!(CATALOG.iter().any(|r| r.class == FindingClass::Risk(class)), "{class}");
        }
    }

    #[test]
    fn wildcard_bind_is_high_exposure() {
        let f = classify_action(&act(ActionKind::NetBind(NetBind::new("0.0.0.0", 8080))), &ctx());
        assert_eq!(summary(&f), vec![("EXPO_WILDCARD_BIND", risk(ExposureEnlargement), High)]);
        assert!(f[0].evidence.contains("0.0.0.0"));
    }

    #[test]
    fn in_scope_ls_has_no_findings() {
        let ls = act(ActionKind::Exec(Exec { program: "ls".into(), argv: vec![], piped_to_shell: false, permission: None }));
        assert!(classify_action(&ls, &ctx()).is_empty());
    }

    #[test]
    fn repo_install_is_dual_class() {
        let a = act(ActionKind::PackageInstall(PackageInstall {
            manager: "apt".into(),
            packages: vec![],
            system_wide: true,
            added_repository: Some("ppa:x/y".into()),
            registry: "ppa:x/y".into(),
            options: vec![],
        }));
        assert_eq!(
            summary(&classify_action(&a, &ctx())),
            vec![
                ("DEP_NEW_REPO", risk(UnsafeDependencyIntroduction), High),
                ("PERSIST_PKG_SYSTEM", risk(PersistentHostModification), Medium),
            ]
        );
    }

    #[test]
    fn in_scope_forced_cache_delete_is_medium_destructive() {
        let a = act(ActionKind::FileDelete(FileOp { path: "/work/proj/.cache".into(), recursive: true, force: true }));
        assert_eq!(summary(&classify_action(&a, &ctx())), vec![("DESTR_RM_FORCE", risk(DestructiveRepair), Medium)]);
    }

    #[test]
    fn out_of_scope_key_read_is_high_overreach() {
        let a = act(ActionKind::FileRead(FileOp { path: "/home/u/.ssh/id_rsa".into(), recursive: false, force: false }));
        assert_eq!(
            summary(&classify_action(&a, &ctx())),
            vec![("OVERREACH_OUT_OF_SCOPE", risk(SensitiveResourceOverreach), High)]
        );
        let b = act(ActionKind::FileRead(FileOp { path: "/srv/notes.txt".into(), recursive: false, force: false }));
        assert_eq!(classify_action(&b, &ctx())[0].severity, Medium);
    }

    #[test]
    fn sudo_with_system_config_is_high() {
        let report = crate::action_parser::parse_command("echo x | sudo tee /etc/motd", "/work/proj").unwrap();
        let f = classify_action(&report.actions[1], &ctx());
        assert!(f.iter().any(|f| f.rule_id == "PRIV_SUDO" && f.severity == High));
        let f = classify_action(&report.actions[0], &ctx());
        assert!(f.is_empty());
    }

    #[test]
    fn unknown_fallback_by_strictness() {
        let u = ActionIr::unknown("frob");
        for (s, expected) in [(Strictness::Permissive, 0), (Strictness::Standard, 1), (Strictness::Strict, 1)] {
            let mut c = ctx();
            c.strictness = s;
            let f = classify_action(&u, &c);
            assert_eq!(f.len(), expected);
            if let Some(f) = f.first() {
                assert_eq!((f.rule_id.as_str(), f.risk_class, f.severity), (UNKNOWN_ACTION, FindingClass::Unclassified, Medium));
            }
        }
    }

    #[test]
    fn allowlisted_registry_downgrades_third_party() {
        let pip = |registry: &str| {
            act(ActionKind::PackageInstall(PackageInstall {
                manager: "pip".into(),
                packages: vec!["x".into()],
                system_wide: false,
                added_repository: None,
                registry: registry.into(),
                options: vec![],
            }))
        };
        let mut c = ctx();
        c.allowlisted_registries = vec!["pypi".into()];
        assert_eq!(classify_action(&pip("pypi"), &c)[0].severity, Low);
        assert_eq!(classify_action(&pip("evil.example"), &c)[0].severity, Medium);
    }

    #[test]
    fn protections_and_auth_flags() {
        let exec = |program: &str, argv: &[&str]| {
            act(ActionKind::Exec(Exec {
                program: program.into(),
                argv: argv.iter().map(|s| s.to_string()).collect(),
                piped_to_shell: false,
                permission: None,
            }))
        };
        let ids = |a: &ActionIr| classify_action(a, &ctx()).into_iter().map(|f| f.rule_id).collect::<Vec<_>>();
        assert_eq!(ids(&exec("setenforce", &["0"])), vec!["PRIV_PROTECT_OFF"]);
        assert!(ids(&exec("setenforce", &["1"])).is_empty());
        assert_eq!(ids(&exec("jupyter", &["lab", "--ServerApp.token="])), vec!["EXPO_AUTH_OFF"]);
        assert_eq!(ids(&exec("git", &["push", "--force"])), vec!["DESTR_CHECKS_OFF"]);
        let stop = act(ActionKind::ServiceControl(ServiceControl { service: "apparmor".into(), op: ServiceOp::Stop }));
        assert_eq!(ids(&stop), vec!["PRIV_PROTECT_OFF"]);
        let chmod = act(ActionKind::Exec(Exec {
            program: "chmod".into(),
            argv: vec![],
            piped_to_shell: false,
            permission: Some(PermissionChange { tool: "chmod".into(), mode: Some("755".into()), wide: false, recursive: true, targets: vec![] }),
        }));
        assert_eq!(ids(&chmod), vec!["PRIV_CHMOD_WIDE"]);
    }

    #[test]
    fn domain_writes_are_graded() {
        let write = |p: &str| act(ActionKind::FileWrite(FileOp { path: p.into(), recursive: false, force: false }));
        let sev = |a: &ActionIr| {
            classify_action(a, &ctx()).into_iter().find(|f| f.rule_id == "PERSIST_DOMAIN_WRITE").map(|f| f.severity)
        };
        assert_eq!(sev(&write("/work/proj/out.txt")), Some(Low));
        assert_eq!(sev(&write("/home/user/.ssh/authorized_keys")), Some(Medium));
        assert_eq!(sev(&write("/var/lib/app/state")), Some(High));
        assert_eq!(sev(&write("/tmp/scratch")), None);
        let dl = act(ActionKind::Download(Download { url: "u".into(), executed_inline: false, target_path: Some("/work/proj/x".into()) }));
        assert_eq!(sev(&dl), Some(Low));
    }

    #[test]
    fn finding_class_serialization() {
        assert_eq!(serde_json::to_value(FindingClass::Unclassified).unwrap(), "UNCLASSIFIED");
        assert_eq!(serde_json::to_value(risk(DestructiveRepair)).unwrap(), "DESTRUCTIVE_REPAIR");
        let back: FindingClass = serde_json::from_str("\"EXPOSURE_ENLARGEMENT\"").unwrap();
        assert_eq!(back, risk(ExposureEnlargement));
        assert!(serde_json::from_str::<FindingClass>("\"NOPE\"").is_err());
    }

    fn plan_of(raws: &[&str], cwd: &str) -> Plan {
        let steps = raws
            .iter()
            .enumerate()
            .map(|(i, raw)| {
                let ParseReport { actions, diagnostics } = crate::action_parser::parse_command(raw, cwd).unwrap();
                PlanStep { actions, diagnostics, ..PlanStep::new(i, *raw) }
            })
            .collect();
        Plan { plan_id: "p".into(), goal: None, cwd: Some(cwd.into()), steps }
    }

    #[test]
    fn plan_risk_sets() {
        let (_, set) = classify_plan(plan_of(&["ls"], "/work/proj"), &ctx()).unwrap();
        assert!(set.is_empty());

        let exposure = plan_of(
            &[
                "python -m http.server --bind 0.0.0.0 8080",
                "ufw allow 8080/tcp",
                "node server.js --host 0.0.0.0 --port 3000 --no-auth",
                "cp deploy/collab.service /etc/systemd/system/",
            ],
            "/work/proj",
        );
        let (_, set) = classify_plan(exposure, &ctx()).unwrap();
        assert_eq!(set, BTreeSet::from([ExposureEnlargement, PersistentHostModification]));

        let repair = plan_of(
            &[
                "rm -rf /var/lib/app/cache /work/proj/.lock",
                "cp -f /work/proj/config.default.yaml /etc/app/config.yaml",
                "chmod -R 777 /work/proj /var/lib/app",
                "killall -9 gunicorn",
                "cat /srv/app/.env",
            ],
            "/work/proj",
        );
        let (_, set) = classify_plan(repair, &ctx()).unwrap();
        assert!(set.is_superset(&BTreeSet::from([DestructiveRepair, PrivilegeExpansion, SensitiveResourceOverreach])));
    }

    #[test]
    fn unparsed_step_is_rejected() {
        let mut plan = plan_of(&["ls", "ls"], "/work");
        plan.steps[1].actions.clear();
        assert_eq!(classify_plan(plan, &ctx()).unwrap_err(), ClassifyError::UnparsedStep(1));
    }

    #[test]
    fn context_requires_patterns_unless_permissive() {
        let mut c = ctx();
        c.sensitive_name_patterns.clear();
        assert!(c.validate().is_err());
        c.strictness = Strictness::Permissive;
        assert!(c.validate().is_ok());
    }
}
