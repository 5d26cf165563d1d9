//! Scenario corpus: per goal, a conservative and a risky plan plus the
//! expected outcome for each.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::pipeline::{AnnotatedPlan, Engine, PipelineError};
use crate::plan_model::{validate_profile, BoundaryProfile, Decision, Plan, PlanDocument, ProfileErrors, RiskClass};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioPlans {
    pub conservative: Vec<String>,
    pub risky: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub risky_classes: BTreeSet<RiskClass>,
    pub conservative_max_verdict: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub goal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub plans: ScenarioPlans,
    pub expected: Expected,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("no scenario files in {0}")]
    Empty(PathBuf),
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, String> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| e.to_string())?;
        s.profile().map_err(|e| e.to_string())?;
        if s.plans.conservative.is_empty() || s.plans.risky.is_empty() {
            return Err("both plans need at least one step".into());
        }
        if s.expected.conservative_max_verdict == Decision::Deny {
            return Err("conservative_max_verdict must be Allow or Elevate".into());
        }
        Ok(s)
    }

    /// Exactly one of `profile` and `preset` must be given.
    pub fn profile(&self) -> Result<BoundaryProfile, ScenarioProfileError> {
        match (&self.profile, &self.preset) {
            (Some(doc), None) => validate_profile(doc).map_err(ScenarioProfileError::Invalid),
            (None, Some(name)) => BoundaryProfile::preset_by_name(name).ok_or_else(|| ScenarioProfileError::UnknownPreset(name.clone())),
            _ => Err(ScenarioProfileError::NeedOne),
        }
    }

    fn plan(&self, variant: &str, steps: &[String]) -> Plan {
        Plan::from_document(PlanDocument {
            plan_id: Some(format!("{}-{variant}", self.name)),
            goal: Some(self.goal.clone()),
            steps: steps.to_vec(),
            rationales: None,
            cwd: None,
        })
        .expect("steps checked non-empty")
    }

    pub fn conservative_plan(&self) -> Plan {
        self.plan("conservative", &self.plans.conservative)
    }

    pub fn risky_plan(&self) -> Plan {
        self.plan("risky", &self.plans.risky)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioProfileError {
    #[error("give exactly one of profile and preset")]
    NeedOne,
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("{0}")]
    Invalid(ProfileErrors),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub name: String,
    pub risky_classes: BTreeSet<RiskClass>,
    pub expected_classes: BTreeSet<RiskClass>,
    pub conservative_verdict: Decision,
    pub conservative_max_verdict: Decision,
    pub passed: bool,
    pub conservative: AnnotatedPlan,
    pub risky: AnnotatedPlan,
}

impl ScenarioResult {
    pub fn failure(&self) -> Option<String> {
        if self.passed {
            return None;
        }
        let mut why = Vec::new();
        if self.risky_classes != self.expected_classes {
            why.push(format!("risky classes {:?} != expected {:?}", self.risky_classes, self.expected_classes));
        }
        if self.conservative_verdict > self.conservative_max_verdict {
            why.push(format!("conservative verdict {:?} above {:?}", self.conservative_verdict, self.conservative_max_verdict));
        }
        Some(why.join("; "))
    }
}

pub fn run_scenario(engine: &Engine, scenario: &Scenario) -> Result<ScenarioResult, PipelineError> {
    let profile = scenario.profile().expect("validated on load");
    let risky = engine.annotate(&scenario.risky_plan(), &profile)?;
    let conservative = engine.annotate(&scenario.conservative_plan(), &profile)?;
    let conservative_verdict = conservative.plan_verdict.decision;
    let passed = risky.risk_classes == scenario.expected.risky_classes
        && conservative_verdict <= scenario.expected.conservative_max_verdict;
    Ok(ScenarioResult {
        name: scenario.name.clone(),
        risky_classes: risky.risk_classes.clone(),
        expected_classes: scenario.expected.risky_classes.clone(),
        conservative_verdict,
        conservative_max_verdict: scenario.expected.conservative_max_verdict,
        passed,
        conservative,
        risky,
    })
}

/// Loads every `*.json` file in `dir`, sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<Scenario>, CorpusError> {
    let entries = std::fs::read_dir(dir).map_err(|source| CorpusError::Io { path: dir.to_path_buf(), source })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CorpusError::Empty(dir.to_path_buf()));
    }
    files
        .into_iter()
        .map(|path| {
            let text = std::fs::read_to_string(&path).map_err(|source| CorpusError::Io { path: path.clone(), source })?;
            Scenario::from_json(&text).map_err(|message| CorpusError::Malformed { path, message })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"{
        "name": "t", "goal": "g", "preset": "Standard",
        "plans": {"conservative": ["ls"], "risky": ["python3 app.py --host 0.0.0.0 --port 8000"]},
        "expected": {"risky_classes": ["EXPOSURE_ENLARGEMENT"], "conservative_max_verdict": "Allow"}
    }"#;

    #[test]
    fn passing_and_failing_scenarios() {
        let s = Scenario::from_json(TEXT).unwrap();
        let r = run_scenario(&Engine::default(), &s).unwrap();
        assert!(r.passed, "{:?}", r.failure());
        let mut wrong = s.clone();
        wrong.expected.risky_classes.insert(RiskClass::PrivilegeExpansion);
        let r = run_scenario(&Engine::default(), &wrong).unwrap();
        assert!(!r.passed);
        assert!(r.failure().unwrap().contains("risky classes"));
    }

    #[test]
    fn malformed_scenarios() {
        let both = TEXT.replace(r#""preset": "Standard","#, r#""preset": "Standard", "profile": {},"#);
        assert!(Scenario::from_json(&both).is_err());
        let neither = TEXT.replace(r#""preset": "Standard","#, "");
        assert!(Scenario::from_json(&neither).is_err());
        assert!(Scenario::from_json(&TEXT.replace("\"Allow\"", "\"Deny\"")).is_err());
        assert!(Scenario::from_json(&TEXT.replace("[\"ls\"]", "[]")).is_err());
        assert!(Scenario::from_json(&TEXT.replace("EXPOSURE_ENLARGEMENT", "EXPOSURE")).is_err());
    }

    #[test]
    fn empty_dir_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_dir(dir.path()), Err(CorpusError::Empty(_))));
        std::fs::write(dir.path().join("a.json"), TEXT).unwrap();
        assert_eq!(load_dir(dir.path()).unwrap().len(), 1);
    }
}
