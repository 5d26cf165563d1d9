//! Findings plus a boundary profile to verdicts on Allow < Elevate < Deny.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan_model::{
    BoundaryProfile, Decision, DependencyPolicy, DestructivePolicy, ExposureCeiling, Plan, PlanStep,
    PersistenceCeiling, PrivilegeCeiling, RiskClass, StepVerdict, Strictness,
};
use crate::risk_classifier::{FindingClass, RiskFinding, Severity};

/// The profile field that governs a finding class, and that field's
/// values from tightest to loosest.
pub fn governing_field(class: FindingClass) -> (&'static str, &'static [&'static str]) {
    match class {
        FindingClass::Risk(RiskClass::PersistentHostModification) => {
            ("persistence_ceiling", &["None", "SessionLocal", "Workspace", "System"])
        }
        FindingClass::Risk(RiskClass::ExposureEnlargement) => {
            ("exposure_ceiling", &["NoNetwork", "Loopback", "PrivateNet", "Public"])
        }
        FindingClass::Risk(RiskClass::PrivilegeExpansion) => {
            ("privilege_ceiling", &["User", "ElevatedWithConfirm", "Elevated"])
        }
        FindingClass::Risk(RiskClass::UnsafeDependencyIntroduction) => {
            ("dependency_policy", &["Forbid", "AllowlistedRegistries", "AnyWithConfirm", "Any"])
        }
        FindingClass::Risk(RiskClass::DestructiveRepair) => ("destructive_policy", &["Forbid", "Confirm", "Allow"]),
        // Overreach findings already encode the scope comparison.
        FindingClass::Risk(RiskClass::SensitiveResourceOverreach) => ("scope_paths", &["OutOfScope"]),
        FindingClass::Unclassified => ("strictness", &["Unmodelled"]),
    }
}

/// Table key value of the governing field for `profile`.
pub fn field_value_key(class: FindingClass, profile: &BoundaryProfile) -> &'static str {
    let (_, values) = governing_field(class);
    let name = match class {
        FindingClass::Risk(RiskClass::PersistentHostModification) => match profile.persistence_ceiling {
            PersistenceCeiling::None => "None",
            PersistenceCeiling::SessionLocal => "SessionLocal",
            PersistenceCeiling::Workspace => "Workspace",
            PersistenceCeiling::System => "System",
        },
        FindingClass::Risk(RiskClass::ExposureEnlargement) => match profile.exposure_ceiling {
            ExposureCeiling::NoNetwork => "NoNetwork",
            ExposureCeiling::Loopback => "Loopback",
            ExposureCeiling::PrivateNet => "PrivateNet",
            ExposureCeiling::Public => "Public",
        },
        FindingClass::Risk(RiskClass::PrivilegeExpansion) => match profile.privilege_ceiling {
            PrivilegeCeiling::User => "User",
            PrivilegeCeiling::ElevatedWithConfirm => "ElevatedWithConfirm",
            PrivilegeCeiling::Elevated => "Elevated",
        },
        FindingClass::Risk(RiskClass::UnsafeDependencyIntroduction) => profile.dependency_policy.name(),
        FindingClass::Risk(RiskClass::DestructiveRepair) => match profile.destructive_policy {
            DestructivePolicy::Forbid => "Forbid",
            DestructivePolicy::Confirm => "Confirm",
            DestructivePolicy::Allow => "Allow",
        },
        FindingClass::Risk(RiskClass::SensitiveResourceOverreach) | FindingClass::Unclassified => values[0],
    };
    debug_assert!(values.contains(&name));
    name
}

const CONFIRM_VALUES: &[&str] = &["ElevatedWithConfirm", "AnyWithConfirm", "Confirm"];
const FORBID_VALUE: &str = "Forbid";

/// Lowest field value (as an index into the governing order) that admits a
/// finding without intervention.
fn needed_level(class: RiskClass, severity: Severity) -> usize {
    use RiskClass::*;
    use Severity::*;
    match (class, severity) {
        (ExposureEnlargement, Low) => 2,
        (ExposureEnlargement, _) => 3,
        (PrivilegeExpansion, _) => 2,
        (PersistentHostModification, Low) => 2,
        (PersistentHostModification, _) => 3,
        // Allowlisted registries still get confirmation; see DEP_THIRD_PARTY.
        (UnsafeDependencyIntroduction, Low) => 2,
        (UnsafeDependencyIntroduction, _) => 3,
        (DestructiveRepair, _) => 2,
        (SensitiveResourceOverreach, _) => unreachable!("overreach is graded by strictness"),
    }
}

/// The built-in distance rule.
pub fn default_verdict(class: FindingClass, field_value: &str, severity: Severity, strictness: Strictness) -> Decision {
    let (_, values) = governing_field(class);
    match class {
        FindingClass::Unclassified => match strictness {
            Strictness::Permissive => Decision::Allow,
            Strictness::Standard => Decision::Elevate,
            Strictness::Strict => Decision::Deny,
        },
        FindingClass::Risk(RiskClass::SensitiveResourceOverreach) => {
            if severity == Severity::High && strictness != Strictness::Permissive {
                Decision::Deny
            } else {
                Decision::Elevate
            }
        }
        FindingClass::Risk(rc) => {
            let level = values.iter().position(|v| *v == field_value).expect("known field value");
            let needed = needed_level(rc, severity);
            if level >= needed {
                return Decision::Allow;
            }
            if field_value == FORBID_VALUE || needed - level >= 2 {
                return Decision::Deny;
            }
            if strictness == Strictness::Strict && severity == Severity::High && CONFIRM_VALUES.contains(&field_value) {
                return Decision::Deny;
            }
            Decision::Elevate
        }
    }
}

pub const ALL_FINDING_CLASSES: [FindingClass; 7] = [
    FindingClass::Risk(RiskClass::PrivilegeExpansion),
    FindingClass::Risk(RiskClass::SensitiveResourceOverreach),
    FindingClass::Risk(RiskClass::PersistentHostModification),
    FindingClass::Risk(RiskClass::ExposureEnlargement),
    FindingClass::Risk(RiskClass::UnsafeDependencyIntroduction),
    FindingClass::Risk(RiskClass::DestructiveRepair),
    FindingClass::Unclassified,
];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TableKey {
    pub risk_class: FindingClass,
    pub field_value: String,
    pub severity: Severity,
    pub strictness: Strictness,
}

impl fmt::Display for TableKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {:?}, {:?})", self.risk_class, self.field_value, self.severity, self.strictness)
    }
}

/// Every key the table must cover.
pub fn all_keys() -> Vec<TableKey> {
    let mut keys = Vec::new();
    for class in ALL_FINDING_CLASSES {
        let (_, values) = governing_field(class);
        for value in values {
            for severity in Severity::ALL {
                for strictness in Strictness::ALL {
                    keys.push(TableKey { risk_class: class, field_value: value.to_string(), severity, strictness });
                }
            }
        }
    }
    keys
}

/// One override row in a policy table file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRow {
    pub risk_class: FindingClass,
    pub field_value: String,
    pub severity: Severity,
    pub strictness: Strictness,
    pub verdict: Decision,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TableReport {
    pub missing: Vec<TableKey>,
    pub unknown: Vec<TableKey>,
    /// Pairs where loosening a key raised the verdict.
    pub violations: Vec<String>,
}

impl TableReport {
    pub fn is_clean(&self) -> bool {
        self.missing.is_empty() && self.unknown.is_empty() && self.violations.is_empty()
    }
}

impl fmt::Display for TableReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in &self.missing {
            writeln!(f, "missing: {k}")?;
        }
        for k in &self.unknown {
            writeln!(f, "unknown key: {k}")?;
        }
        for v in &self.violations {
            writeln!(f, "non-monotone: {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PolicyTableError {
    #[error("policy table file is not valid JSON: {0}")]
    Format(#[from] serde_json::Error),
    #[error("policy table rejected:\n{0}")]
    Rejected(TableReport),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyTable {
    rows: BTreeMap<TableKey, Decision>,
}

impl Default for PolicyTable {
    fn default() -> Self {
        let rows = all_keys()
            .into_iter()
            .map(|k| {
                let d = default_verdict(k.risk_class, &k.field_value, k.severity, k.strictness);
                (k, d)
            })
            .collect();
        PolicyTable { rows }
    }
}

impl PolicyTable {
    pub fn from_rows(rows: BTreeMap<TableKey, Decision>) -> Result<PolicyTable, PolicyTableError> {
        let table = PolicyTable { rows };
        let report = table.check();
        if report.is_clean() {
            Ok(table)
        } else {
            Err(PolicyTableError::Rejected(report))
        }
    }

    /// Default table with `overrides` applied, then checked.
    pub fn with_overrides(overrides: &[TableRow]) -> Result<PolicyTable, PolicyTableError> {
        let mut rows = PolicyTable::default().rows;
        for row in overrides {
            let key = TableKey {
                risk_class: row.risk_class,
                field_value: row.field_value.clone(),
                severity: row.severity,
                strictness: row.strictness,
            };
            rows.insert(key, row.verdict);
        }
        PolicyTable::from_rows(rows)
    }

    pub fn from_json(text: &str) -> Result<PolicyTable, PolicyTableError> {
        let rows: Vec<TableRow> = serde_json::from_str(text)?;
        PolicyTable::with_overrides(&rows)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&TableKey, &Decision)> {
        self.rows.iter()
    }

    pub fn get(&self, key: &TableKey) -> Option<Decision> {
        self.rows.get(key).copied()
    }

    /// Completeness and monotonicity: tightening the field value, raising
    /// severity or raising strictness never lowers the verdict.
    pub fn check(&self) -> TableReport {
        let mut report = TableReport::default();
        let expected = all_keys();
        for key in &expected {
            if !self.rows.contains_key(key) {
                report.missing.push(key.clone());
            }
        }
        for key in self.rows.keys() {
            if !expected.contains(key) {
                report.unknown.push(key.clone());
            }
        }
        if !report.missing.is_empty() {
            return report;
        }
        let at = |k: &TableKey| self.rows[k];
        for key in &expected {
            let (_, values) = governing_field(key.risk_class);
            let pos = values.iter().position(|v| *v == key.field_value).unwrap();
            let mut looser = Vec::new();
            if let Some(next) = values.get(pos + 1) {
                looser.push(TableKey { field_value: next.to_string(), ..key.clone() });
            }
            // Lower severity and lower strictness are "looser" inputs.
            if let Some(lower) = Severity::ALL.iter().rev().skip_while(|s| **s != key.severity).nth(1) {
                looser.push(TableKey { severity: *lower, ..key.clone() });
            }
            if let Some(lower) = Strictness::ALL.iter().rev().skip_while(|s| **s != key.strictness).nth(1) {
                looser.push(TableKey { strictness: *lower, ..key.clone() });
            }
            for other in looser {
                if at(&other) > at(key) {
                    report.violations.push(format!("{key} -> {:?} but looser {other} -> {:?}", at(key), at(&other)));
                }
            }
        }
        report
    }

    pub fn lookup(&self, finding: &RiskFinding, profile: &BoundaryProfile) -> Decision {
        let key = TableKey {
            risk_class: finding.risk_class,
            field_value: field_value_key(finding.risk_class, profile).to_string(),
            severity: finding.severity,
            strictness: profile.strictness,
        };
        // Tables are checked complete at construction.
        self.rows.get(&key).copied().unwrap_or(Decision::Deny)
    }

    /// Join over the mapped verdict of every finding. The rationale names
    /// each finding that reaches the joined decision, sorted by rule id.
    pub fn verdict_for_step(&self, findings: &[RiskFinding], profile: &BoundaryProfile) -> StepVerdict {
        let mapped: Vec<(&RiskFinding, Decision)> = findings.iter().map(|f| (f, self.lookup(f, profile))).collect();
        let decision = mapped.iter().fold(Decision::Allow, |acc, (_, d)| acc.join(*d));
        let mut reasons: Vec<&RiskFinding> = mapped.iter().filter(|(_, d)| *d == decision).map(|(f, _)| *f).collect();
        reasons.sort_by(|a, b| a.rule_id.cmp(&b.rule_id).then(a.evidence.cmp(&b.evidence)));
        let rationale = reasons
            .iter()
            .map(|f| {
                let (field, _) = governing_field(f.risk_class);
                format!("{} ({} {:?}) under {}={}", f.rule_id, f.risk_class, f.severity, field, profile.field_value(field))
            })
            .collect::<Vec<_>>()
            .join("; ");
        StepVerdict { decision, rationale, elevation_id: None }
    }

    pub fn explain(&self, step: &PlanStep, profile: &BoundaryProfile) -> Vec<ExplanationRow> {
        step.findings
            .iter()
            .map(|f| {
                let (field, _) = governing_field(f.risk_class);
                ExplanationRow {
                    rule_id: f.rule_id.clone(),
                    risk_class: f.risk_class,
                    severity: f.severity,
                    evidence: f.evidence.clone(),
                    field: field.to_string(),
                    field_value: profile.field_value(field),
                    verdict: self.lookup(f, profile),
                }
            })
            .collect()
    }
}

/// Why the gate objects to a finding: which profile field and value, and
/// what the table maps it to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationRow {
    pub rule_id: String,
    pub risk_class: FindingClass,
    pub severity: Severity,
    pub evidence: String,
    pub field: String,
    pub field_value: String,
    pub verdict: Decision,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanVerdict {
    pub decision: Decision,
    pub blocking_steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("step {0} has no verdict")]
    MissingStepVerdict(usize),
}

pub fn verdict_for_plan(plan: &Plan) -> Result<PlanVerdict, PolicyError> {
    let mut decisions = Vec::with_capacity(plan.steps.len());
    for step in &plan.steps {
        let v = step.verdict.as_ref().ok_or(PolicyError::MissingStepVerdict(step.index))?;
        decisions.push((step.index, v.decision));
    }
    Ok(join_decisions(&decisions))
}

pub fn join_decisions(decisions: &[(usize, Decision)]) -> PlanVerdict {
    let decision = decisions.iter().fold(Decision::Allow, |acc, (_, d)| acc.join(*d));
    let blocking_steps = if decision == Decision::Allow {
        Vec::new()
    } else {
        decisions.iter().filter(|(_, d)| *d == decision).map(|(i, _)| *i).collect()
    };
    PlanVerdict { decision, blocking_steps }
}

/// Whether a profile's dependency policy admits a registry without a
/// finding of its own.
pub fn registry_allowlisted(profile: &BoundaryProfile, registry: &str) -> bool {
    matches!(&profile.dependency_policy, DependencyPolicy::AllowlistedRegistries(l) if l.iter().any(|r| r == registry))
}
