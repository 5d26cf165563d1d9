//! Shared vocabulary: goals, boundary profiles, plans, risk classes and
//! verdicts, plus profile validation and the tightness order over profiles.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::action_parser::{ActionIr, Diagnostic};
use crate::paths::{self, DEFAULT_WORKSPACE};
use crate::risk_classifier::RiskFinding;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub text: String,
    pub session_label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GoalError {
    #[error("goal text is empty")]
    EmptyText,
    #[error("session label {0:?} must match [A-Za-z0-9_-]{{1,64}}")]
    BadLabel(String),
}

impl Goal {
    pub fn new(text: impl Into<String>, session_label: impl Into<String>) -> Result<Self, GoalError> {
        let goal = Goal { text: text.into(), session_label: session_label.into() };
        goal.validate()?;
        Ok(goal)
    }

    pub fn validate(&self) -> Result<(), GoalError> {
        if self.text.trim().is_empty() {
            return Err(GoalError::EmptyText);
        }
        let label = &self.session_label;
        let ok = (1..=64).contains(&label.len())
            && label.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-');
        if !ok {
            return Err(GoalError::BadLabel(label.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PersistenceCeiling {
    None,
    SessionLocal,
    Workspace,
    System,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExposureCeiling {
    NoNetwork,
    Loopback,
    PrivateNet,
    Public,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PrivilegeCeiling {
    User,
    ElevatedWithConfirm,
    Elevated,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DependencyPolicy {
    Forbid,
    AllowlistedRegistries(Vec<String>),
    AnyWithConfirm,
    Any,
}

impl DependencyPolicy {
    /// Position in Forbid < AllowlistedRegistries < AnyWithConfirm < Any.
    pub fn rank(&self) -> u8 {
        match self {
            DependencyPolicy::Forbid => 0,
            DependencyPolicy::AllowlistedRegistries(_) => 1,
            DependencyPolicy::AnyWithConfirm => 2,
            DependencyPolicy::Any => 3,
        }
    }

    pub fn allowlist(&self) -> &[String] {
        match self {
            DependencyPolicy::AllowlistedRegistries(list) => list,
            _ => &[],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DependencyPolicy::Forbid => "Forbid",
            DependencyPolicy::AllowlistedRegistries(_) => "AllowlistedRegistries",
            DependencyPolicy::AnyWithConfirm => "AnyWithConfirm",
            DependencyPolicy::Any => "Any",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DestructivePolicy {
    Forbid,
    Confirm,
    Allow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strictness {
    Permissive,
    Standard,
    Strict,
}

impl Strictness {
    pub const ALL: [Strictness; 3] = [Strictness::Permissive, Strictness::Standard, Strictness::Strict];

    pub fn parse(name: &str) -> Option<Strictness> {
        match name {
            "Permissive" | "permissive" => Some(Strictness::Permissive),
            "Standard" | "standard" => Some(Strictness::Standard),
            "Strict" | "strict" => Some(Strictness::Strict),
            _ => None,
        }
    }
}

impl fmt::Display for Strictness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub const DEFAULT_CONFIRMATION_TIMEOUT_S: u64 = 120;

/// The user's explicit safety ceilings. Every field is present at rest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundaryProfile {
    pub persistence_ceiling: PersistenceCeiling,
    pub exposure_ceiling: ExposureCeiling,
    pub privilege_ceiling: PrivilegeCeiling,
    pub scope_paths: Vec<String>,
    pub dependency_policy: DependencyPolicy,
    pub destructive_policy: DestructivePolicy,
    pub confirmation_timeout_s: u64,
    pub strictness: Strictness,
}

pub const PROFILE_FIELDS: [&str; 8] = [
    "persistence_ceiling",
    "exposure_ceiling",
    "privilege_ceiling",
    "scope_paths",
    "dependency_policy",
    "destructive_policy",
    "confirmation_timeout_s",
    "strictness",
];

impl BoundaryProfile {
    /// Named preset expansion. Presets scope the default workspace root.
    pub fn preset(strictness: Strictness) -> BoundaryProfile {
        Self::preset_for(strictness, DEFAULT_WORKSPACE)
    }

    pub fn preset_for(strictness: Strictness, workspace: &str) -> BoundaryProfile {
        match strictness {
            Strictness::Permissive => BoundaryProfile {
                persistence_ceiling: PersistenceCeiling::System,
                exposure_ceiling: ExposureCeiling::Public,
                privilege_ceiling: PrivilegeCeiling::Elevated,
                scope_paths: vec!["/".to_string()],
                dependency_policy: DependencyPolicy::Any,
                destructive_policy: DestructivePolicy::Confirm,
                confirmation_timeout_s: DEFAULT_CONFIRMATION_TIMEOUT_S,
                strictness,
            },
            Strictness::Standard => BoundaryProfile {
                persistence_ceiling: PersistenceCeiling::Workspace,
                exposure_ceiling: ExposureCeiling::Loopback,
                privilege_ceiling: PrivilegeCeiling::ElevatedWithConfirm,
                scope_paths: vec![workspace.to_string()],
                dependency_policy: DependencyPolicy::AnyWithConfirm,
                destructive_policy: DestructivePolicy::Confirm,
                confirmation_timeout_s: DEFAULT_CONFIRMATION_TIMEOUT_S,
                strictness,
            },
            Strictness::Strict => BoundaryProfile {
                persistence_ceiling: PersistenceCeiling::SessionLocal,
                exposure_ceiling: ExposureCeiling::NoNetwork,
                privilege_ceiling: PrivilegeCeiling::User,
                scope_paths: vec![workspace.to_string()],
                dependency_policy: DependencyPolicy::AllowlistedRegistries(Vec::new()),
                destructive_policy: DestructivePolicy::Forbid,
                confirmation_timeout_s: DEFAULT_CONFIRMATION_TIMEOUT_S,
                strictness,
            },
        }
    }

    pub fn preset_by_name(name: &str) -> Option<BoundaryProfile> {
        Strictness::parse(name).map(Self::preset)
    }

    pub fn to_document(&self) -> Value {
        serde_json::to_value(self).expect("profile serializes")
    }

    /// Value of a profile field rendered for rationale and explanation text.
    pub fn field_value(&self, field: &str) -> String {
        match field {
            "persistence_ceiling" => format!("{:?}", self.persistence_ceiling),
            "exposure_ceiling" => format!("{:?}", self.exposure_ceiling),
            "privilege_ceiling" => format!("{:?}", self.privilege_ceiling),
            "scope_paths" => self.scope_paths.join(","),
            "dependency_policy" => match &self.dependency_policy {
                DependencyPolicy::AllowlistedRegistries(l) => {
                    format!("AllowlistedRegistries({})", l.join(","))
                }
                other => other.name().to_string(),
            },
            "destructive_policy" => format!("{:?}", self.destructive_policy),
            "confirmation_timeout_s" => self.confirmation_timeout_s.to_string(),
            "strictness" => self.strictness.to_string(),
            _ => String::new(),
        }
    }
}

impl<'de> Deserialize<'de> for BoundaryProfile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = Value::deserialize(d)?;
        validate_profile(&doc).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error", content = "field")]
pub enum ProfileError {
    #[error("profile document must be a JSON object")]
    NotAnObject,
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("bad value for `{0}`")]
    BadEnumValue(String),
    #[error("`{0}` entries must be absolute paths without `..`")]
    RelativeScopePath(String),
    #[error("`{0}` must be a positive integer")]
    NonPositiveTimeout(String),
}

impl ProfileError {
    pub fn field(&self) -> Option<&str> {
        match self {
            ProfileError::NotAnObject => None,
            ProfileError::MissingField(f)
            | ProfileError::UnknownField(f)
            | ProfileError::BadEnumValue(f)
            | ProfileError::RelativeScopePath(f)
            | ProfileError::NonPositiveTimeout(f) => Some(f),
        }
    }
}

/// All field-level problems found in one profile document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProfileErrors(pub Vec<ProfileError>);

impl fmt::Display for ProfileErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "invalid profile: {}", parts.join("; "))
    }
}

impl std::error::Error for ProfileErrors {}

fn enum_field<T: for<'de> Deserialize<'de>>(
    obj: &Map<String, Value>,
    field: &str,
    errors: &mut Vec<ProfileError>,
) -> Option<T> {
    match obj.get(field) {
        None => {
            errors.push(ProfileError::MissingField(field.to_string()));
            None
        }
        Some(v) => match T::deserialize(v) {
            Ok(t) => Some(t),
            Err(_) => {
                errors.push(ProfileError::BadEnumValue(field.to_string()));
                None
            }
        },
    }
}

/// Validates a profile document against the fail-closed schema. Unknown
/// fields are rejected and nothing is defaulted.
pub fn validate_profile(document: &Value) -> Result<BoundaryProfile, ProfileErrors> {
    let Some(obj) = document.as_object() else {
        return Err(ProfileErrors(vec![ProfileError::NotAnObject]));
    };
    let mut errors = Vec::new();
    for key in obj.keys() {
        if !PROFILE_FIELDS.contains(&key.as_str()) {
            errors.push(ProfileError::UnknownField(key.clone()));
        }
    }

    let persistence = enum_field::<PersistenceCeiling>(obj, "persistence_ceiling", &mut errors);
    let exposure = enum_field::<ExposureCeiling>(obj, "exposure_ceiling", &mut errors);
    let privilege = enum_field::<PrivilegeCeiling>(obj, "privilege_ceiling", &mut errors);

    let scope_paths = match obj.get("scope_paths") {
        None => {
            errors.push(ProfileError::MissingField("scope_paths".into()));
            None
        }
        Some(Value::Array(items)) => {
            let mut out = Vec::with_capacity(items.len());
            let mut ok = true;
            for item in items {
                match item.as_str() {
                    Some(p) if p.starts_with('/') && !p.split('/').any(|s| s == "..") => {
                        out.push(paths::lexical_normalize(p));
                    }
                    Some(_) => {
                        ok = false;
                        errors.push(ProfileError::RelativeScopePath("scope_paths".into()));
                    }
                    None => {
                        ok = false;
                        errors.push(ProfileError::BadEnumValue("scope_paths".into()));
                    }
                }
            }
            ok.then_some(out)
        }
        Some(_) => {
            errors.push(ProfileError::BadEnumValue("scope_paths".into()));
            None
        }
    };

    let dependency = match obj.get("dependency_policy") {
        None => {
            errors.push(ProfileError::MissingField("dependency_policy".into()));
            None
        }
        Some(v) => match DependencyPolicy::deserialize(v) {
            Ok(DependencyPolicy::AllowlistedRegistries(list)) => {
                let set: BTreeSet<String> = list.into_iter().collect();
                Some(DependencyPolicy::AllowlistedRegistries(set.into_iter().collect()))
            }
            Ok(p) => Some(p),
            Err(_) => {
                errors.push(ProfileError::BadEnumValue("dependency_policy".into()));
                None
            }
        },
    };

    let destructive = enum_field::<DestructivePolicy>(obj, "destructive_policy", &mut errors);

    let timeout = match obj.get("confirmation_timeout_s") {
        None => {
            errors.push(ProfileError::MissingField("confirmation_timeout_s".into()));
            None
        }
        Some(v) => match v.as_u64() {
            Some(n) if n >= 1 => Some(n),
            _ => {
                errors.push(ProfileError::NonPositiveTimeout("confirmation_timeout_s".into()));
                None
            }
        },
    };

    let strictness = enum_field::<Strictness>(obj, "strictness", &mut errors);

    if !errors.is_empty() {
        return Err(ProfileErrors(errors));
    }
    Ok(BoundaryProfile {
        persistence_ceiling: persistence.unwrap(),
        exposure_ceiling: exposure.unwrap(),
        privilege_ceiling: privilege.unwrap(),
        scope_paths: scope_paths.unwrap(),
        dependency_policy: dependency.unwrap(),
        destructive_policy: destructive.unwrap(),
        confirmation_timeout_s: timeout.unwrap(),
        strictness: strictness.unwrap(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileOrdering {
    Tighter,
    Looser,
    Equal,
    Incomparable,
}

/// Every path of `a` lies under some path of `b`.
fn scope_within(a: &[String], b: &[String]) -> bool {
    a.iter().all(|p| b.iter().any(|q| paths::is_under(p, q)))
}

fn scope_order(a: &[String], b: &[String]) -> Option<Ordering> {
    match (scope_within(a, b), scope_within(b, a)) {
        (true, true) => Some(Ordering::Equal),
        (true, false) => Some(Ordering::Less),
        (false, true) => Some(Ordering::Greater),
        (false, false) => None,
    }
}

fn dependency_order(a: &DependencyPolicy, b: &DependencyPolicy) -> Option<Ordering> {
    match (a, b) {
        (DependencyPolicy::AllowlistedRegistries(x), DependencyPolicy::AllowlistedRegistries(y)) => {
            let x: BTreeSet<&String> = x.iter().collect();
            let y: BTreeSet<&String> = y.iter().collect();
            match (x.is_subset(&y), y.is_subset(&x)) {
                (true, true) => Some(Ordering::Equal),
                (true, false) => Some(Ordering::Less),
                (false, true) => Some(Ordering::Greater),
                (false, false) => None,
            }
        }
        _ => Some(a.rank().cmp(&b.rank())),
    }
}

/// Per-field comparisons where `Less` means `a` is tighter.
pub fn field_orders(a: &BoundaryProfile, b: &BoundaryProfile) -> [(&'static str, Option<Ordering>); 8] {
    [
        ("persistence_ceiling", Some(a.persistence_ceiling.cmp(&b.persistence_ceiling))),
        ("exposure_ceiling", Some(a.exposure_ceiling.cmp(&b.exposure_ceiling))),
        ("privilege_ceiling", Some(a.privilege_ceiling.cmp(&b.privilege_ceiling))),
        ("scope_paths", scope_order(&a.scope_paths, &b.scope_paths)),
        ("dependency_policy", dependency_order(&a.dependency_policy, &b.dependency_policy)),
        ("destructive_policy", Some(a.destructive_policy.cmp(&b.destructive_policy))),
        ("confirmation_timeout_s", Some(a.confirmation_timeout_s.cmp(&b.confirmation_timeout_s))),
        // Strict is the tight end.
        ("strictness", Some(b.strictness.cmp(&a.strictness))),
    ]
}

pub fn compare_profiles(a: &BoundaryProfile, b: &BoundaryProfile) -> ProfileOrdering {
    let mut less = false;
    let mut greater = false;
    for (_, ord) in field_orders(a, b) {
        match ord {
            None => return ProfileOrdering::Incomparable,
            Some(Ordering::Less) => less = true,
            Some(Ordering::Greater) => greater = true,
            Some(Ordering::Equal) => {}
        }
    }
    match (less, greater) {
        (false, false) => ProfileOrdering::Equal,
        (true, false) => ProfileOrdering::Tighter,
        (false, true) => ProfileOrdering::Looser,
        (true, true) => ProfileOrdering::Incomparable,
    }
}

/// The six risky-completion patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RiskClass {
    PrivilegeExpansion,
    SensitiveResourceOverreach,
    PersistentHostModification,
    ExposureEnlargement,
    UnsafeDependencyIntroduction,
    DestructiveRepair,
}

impl RiskClass {
    pub const ALL: [RiskClass; 6] = [
        RiskClass::PrivilegeExpansion,
        RiskClass::SensitiveResourceOverreach,
        RiskClass::PersistentHostModification,
        RiskClass::ExposureEnlargement,
        RiskClass::UnsafeDependencyIntroduction,
        RiskClass::DestructiveRepair,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RiskClass::PrivilegeExpansion => "PRIVILEGE_EXPANSION",
            RiskClass::SensitiveResourceOverreach => "SENSITIVE_RESOURCE_OVERREACH",
            RiskClass::PersistentHostModification => "PERSISTENT_HOST_MODIFICATION",
            RiskClass::ExposureEnlargement => "EXPOSURE_ENLARGEMENT",
            RiskClass::UnsafeDependencyIntroduction => "UNSAFE_DEPENDENCY_INTRODUCTION",
            RiskClass::DestructiveRepair => "DESTRUCTIVE_REPAIR",
        }
    }

    pub fn parse(name: &str) -> Option<RiskClass> {
        RiskClass::ALL.into_iter().find(|c| c.as_str() == name)
    }
}

impl fmt::Display for RiskClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Allow < Elevate < Deny.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Decision {
    Allow,
    Elevate,
    Deny,
}

impl Decision {
    pub const ALL: [Decision; 3] = [Decision::Allow, Decision::Elevate, Decision::Deny];

    pub fn join(self, other: Decision) -> Decision {
        self.max(other)
    }

    pub fn parse(name: &str) -> Option<Decision> {
        Decision::ALL.into_iter().find(|d| format!("{d:?}") == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepVerdict {
    pub decision: Decision,
    pub rationale: String,
    pub elevation_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub index: usize,
    pub raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    pub actions: Vec<ActionIr>,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
    pub findings: Vec<RiskFinding>,
    pub verdict: Option<StepVerdict>,
}

impl PlanStep {
    pub fn new(index: usize, raw: impl Into<String>) -> PlanStep {
        PlanStep {
            index,
            raw: raw.into(),
            rationale: None,
            actions: Vec::new(),
            diagnostics: Vec::new(),
            findings: Vec::new(),
            verdict: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub plan_id: String,
    pub goal: Option<String>,
    pub cwd: Option<String>,
    pub steps: Vec<PlanStep>,
}

/// Plan file contents: `{"plan_id", "goal", "steps": [..]}` plus optional
/// per-step `rationales` and a working directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDocument {
    #[serde(default)]
    pub plan_id: Option<String>,
    #[serde(default)]
    pub goal: Option<String>,
    pub steps: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationales: Option<Vec<Option<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cwd: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("plan has no steps")]
    EmptyPlan,
    #[error("step {0} is empty")]
    EmptyStep(usize),
    #[error("plan id {0:?} already submitted")]
    DuplicatePlanId(String),
    #[error("malformed plan document: {0}")]
    Format(String),
}

pub const DEFAULT_PLAN_ID: &str = "plan";

impl Plan {
    pub fn from_document(doc: PlanDocument) -> Result<Plan, PlanError> {
        if doc.steps.is_empty() {
            return Err(PlanError::EmptyPlan);
        }
        if let Some(i) = doc.steps.iter().position(|s| s.trim().is_empty()) {
            return Err(PlanError::EmptyStep(i));
        }
        if let Some(cwd) = &doc.cwd {
            if !cwd.starts_with('/') {
                return Err(PlanError::Format(format!("cwd {cwd:?} is not absolute")));
            }
        }
        let rationales = doc.rationales.unwrap_or_default();
        let steps = doc
            .steps
            .into_iter()
            .enumerate()
            .map(|(i, raw)| {
                let mut step = PlanStep::new(i, raw);
                step.rationale = rationales.get(i).cloned().flatten();
                step
            })
            .collect();
        Ok(Plan {
            plan_id: doc.plan_id.unwrap_or_else(|| DEFAULT_PLAN_ID.to_string()),
            goal: doc.goal,
            cwd: doc.cwd,
            steps,
        })
    }

    /// Union of finding classes over all steps.
    pub fn risk_set(&self) -> BTreeSet<RiskClass> {
        self.steps
            .iter()
            .flat_map(|s| s.findings.iter().filter_map(|f| f.risk_class.risk_class()))
            .collect()
    }
}

pub fn load_plan(document: &Value) -> Result<Plan, PlanError> {
    let doc = PlanDocument::deserialize(document).map_err(|e| PlanError::Format(e.to_string()))?;
    Plan::from_document(doc)
}
