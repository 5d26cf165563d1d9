//! Parse, classify and judge a whole plan. The CLI and the gateway both go
//! through [`Engine::annotate`], so their annotations agree.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action_parser::{ActionIr, CommandParser, Diagnostic, ParseError, ParseReport, RecognizerExtensions};
use crate::paths::{DomainTable, DEFAULT_WORKSPACE};
use crate::plan_model::{BoundaryProfile, Plan, PlanStep, RiskClass};
use crate::policy_engine::{join_decisions, ExplanationRow, PlanVerdict, PolicyTable};
use crate::risk_classifier::{classify_plan, ClassificationContext, ContextError, DEFAULT_SENSITIVE_PATTERNS};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedStep {
    #[serde(flatten)]
    pub step: PlanStep,
    pub explanation: Vec<ExplanationRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedPlan {
    pub plan_id: String,
    pub goal: Option<String>,
    pub cwd: String,
    pub steps: Vec<AnnotatedStep>,
    pub risk_classes: BTreeSet<RiskClass>,
    pub plan_verdict: PlanVerdict,
}

impl AnnotatedPlan {
    /// Copy with elevation ids cleared, for comparing offline and online
    /// annotations.
    pub fn without_ids(&self) -> AnnotatedPlan {
        let mut out = self.clone();
        for s in &mut out.steps {
            if let Some(v) = &mut s.step.verdict {
                v.elevation_id = None;
            }
        }
        out
    }

    pub fn to_plan(&self) -> Plan {
        Plan {
            plan_id: self.plan_id.clone(),
            goal: self.goal.clone(),
            cwd: Some(self.cwd.clone()),
            steps: self.steps.iter().map(|s| s.step.clone()).collect(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error("working directory {0:?} is not absolute")]
    RelativeCwd(String),
}

/// Everything that shapes an annotation besides the plan and the profile.
#[derive(Debug, Clone)]
pub struct Engine {
    parser: CommandParser,
    policy: PolicyTable,
    domain_table: DomainTable,
    sensitive_patterns: Vec<String>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine {
            parser: CommandParser::default(),
            policy: PolicyTable::default(),
            domain_table: DomainTable::default(),
            sensitive_patterns: DEFAULT_SENSITIVE_PATTERNS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Engine {
    pub fn with_extensions(mut self, extensions: RecognizerExtensions) -> Engine {
        self.parser = self.parser.with_extensions(extensions);
        self
    }

    pub fn with_policy(mut self, policy: PolicyTable) -> Engine {
        self.policy = policy;
        self
    }

    pub fn with_domain_table(mut self, table: DomainTable) -> Engine {
        self.parser = CommandParser::new(table.home.clone()).with_extensions(self.parser.extensions().clone());
        self.domain_table = table;
        self
    }

    pub fn with_sensitive_patterns(mut self, patterns: Vec<String>) -> Engine {
        self.sensitive_patterns = patterns;
        self
    }

    pub fn policy(&self) -> &PolicyTable {
        &self.policy
    }

    pub fn domain_table(&self) -> &DomainTable {
        &self.domain_table
    }

    pub fn parser(&self) -> &CommandParser {
        &self.parser
    }

    pub fn context(&self, profile: &BoundaryProfile) -> ClassificationContext {
        let mut ctx = ClassificationContext::from_profile(profile).with_domain_table(self.domain_table.clone());
        ctx.sensitive_name_patterns = self.sensitive_patterns.clone();
        ctx
    }

    /// Parses one step. Oversized input becomes a single Unknown action so
    /// it is judged rather than dropped.
    pub fn parse_step(&self, raw: &str, cwd: &str) -> Result<ParseReport, PipelineError> {
        match self.parser.parse_command(raw, cwd) {
            Ok(report) => Ok(report),
            Err(ParseError::InputTooLarge(n)) => Ok(ParseReport {
                actions: vec![ActionIr::unknown(&raw[..raw.floor_char_boundary(256)])],
                diagnostics: vec![Diagnostic { span: (0, raw.len()), message: ParseError::InputTooLarge(n).to_string() }],
            }),
            Err(ParseError::RelativeCwd(c)) => Err(PipelineError::RelativeCwd(c)),
        }
    }

    /// Parse, classify and judge every step. Verdicts carry no elevation
    /// ids; the gateway fills those in.
    pub fn annotate(&self, plan: &Plan, profile: &BoundaryProfile) -> Result<AnnotatedPlan, PipelineError> {
        let ctx = self.context(profile);
        ctx.validate()?;
        let cwd = plan.cwd.clone().unwrap_or_else(|| DEFAULT_WORKSPACE.to_string());
        let mut parsed = plan.clone();
        for step in &mut parsed.steps {
            let report = self.parse_step(&step.raw, &cwd)?;
            step.actions = report.actions;
            step.diagnostics = report.diagnostics;
        }
        let (mut classified, risk_classes) = classify_plan(parsed, &ctx).expect("every step has at least one action");
        let mut steps = Vec::with_capacity(classified.steps.len());
        for mut step in classified.steps.drain(..) {
            step.verdict = Some(self.policy.verdict_for_step(&step.findings, profile));
            let explanation = self.policy.explain(&step, profile);
            steps.push(AnnotatedStep { step, explanation });
        }
        let decisions: Vec<_> = steps.iter().map(|s| (s.step.index, s.step.verdict.as_ref().unwrap().decision)).collect();
        Ok(AnnotatedPlan {
            plan_id: classified.plan_id,
            goal: classified.goal,
            cwd,
            steps,
            risk_classes,
            plan_verdict: join_decisions(&decisions),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan_model::{Decision, PlanDocument, Strictness};

    fn plan(steps: &[&str]) -> Plan {
        Plan::from_document(PlanDocument {
            plan_id: Some("p1".into()),
            goal: Some("g".into()),
            steps: steps.iter().map(|s| s.to_string()).collect(),
            rationales: None,
            cwd: None,
        })
        .unwrap()
    }

    fn standard() -> BoundaryProfile {
        BoundaryProfile::preset(Strictness::Standard)
    }

    #[test]
    fn ls_allows() {
        let a = Engine::default().annotate(&plan(&["ls"]), &standard()).unwrap();
        assert_eq!(a.plan_verdict.decision, Decision::Allow);
        assert!(a.risk_classes.is_empty());
        assert_eq!(a.cwd, "/work");
    }

    #[test]
    fn exposure_plan_classes_and_verdict() {
        let a = Engine::default()
            .annotate(
                &plan(&["python3 app.py --host 0.0.0.0 --port 8000", "ufw allow 8000/tcp", "systemctl enable --now app"]),
                &standard(),
            )
            .unwrap();
        assert_eq!(a.risk_classes, BTreeSet::from([RiskClass::ExposureEnlargement, RiskClass::PersistentHostModification]));
        assert_eq!(a.plan_verdict.decision, Decision::Deny);
        assert_eq!(a.plan_verdict.blocking_steps, vec![0, 1]);
        assert!(a.steps.iter().all(|s| s.step.verdict.is_some()));
        assert!(!a.steps[0].explanation.is_empty());
    }

    #[test]
    fn unknown_step_is_at_least_elevate() {
        let a = Engine::default().annotate(&plan(&["frobnicate --all", "ls"]), &standard()).unwrap();
        assert!(a.steps[0].step.verdict.as_ref().unwrap().decision >= Decision::Elevate);
        let big = "x".repeat(70 * 1024);
        let a = Engine::default().annotate(&plan(&[&big]), &standard()).unwrap();
        assert_eq!(a.steps[0].step.actions.len(), 1);
        assert!(a.steps[0].step.actions[0].is_unknown());
        assert!(a.plan_verdict.decision >= Decision::Elevate);
    }

    #[test]
    fn without_ids_clears_elevation_ids() {
        let mut a = Engine::default().annotate(&plan(&["sudo ls"]), &standard()).unwrap();
        a.steps[0].step.verdict.as_mut().unwrap().elevation_id = Some("elv-1".into());
        assert_eq!(a.without_ids(), Engine::default().annotate(&plan(&["sudo ls"]), &standard()).unwrap());
    }

    #[test]
    fn empty_patterns_rejected_outside_permissive() {
        let e = Engine::default().with_sensitive_patterns(vec![]);
        assert!(matches!(e.annotate(&plan(&["ls"]), &standard()), Err(PipelineError::Context(_))));
        assert!(e.annotate(&plan(&["ls"]), &BoundaryProfile::preset(Strictness::Permissive)).is_ok());
    }
}
