use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use bgate_core::audit_trace::{Trace, TraceError, TraceFilter, TraceKind, TraceRecord};
use bgate_core::elevation::{
    Clock, EffectiveVerdict, ElevationDecision, ElevationError, ElevationRegistry, ElevationRequest, ElevationState,
    SystemClock, Transition,
};
use bgate_core::host_sim::{run_plan, ExecutionReport, HostState, SimError, StepOutcome};
use bgate_core::pipeline::PipelineError;
use bgate_core::plan_model::{
    validate_profile, BoundaryProfile, Decision, Goal, GoalError, PlanDocument, PlanError, ProfileErrors, Strictness,
};
use bgate_core::plan_model::Plan;
use bgate_core::{AnnotatedPlan, Engine};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, GatewayConfig};
use crate::events::EventHub;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("malformed request: {0}")]
    Format(String),
    #[error("{0}")]
    InvalidProfile(ProfileErrors),
    #[error("no profile given; send a profile document or name a preset")]
    MissingProfile,
    #[error("invalid goal: {0}")]
    InvalidGoal(#[from] GoalError),
    #[error("{0}")]
    Plan(#[from] PlanError),
    #[error("{0}")]
    Pipeline(#[from] PipelineError),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("unknown plan {0}")]
    UnknownPlan(String),
    #[error("{0}")]
    Elevation(#[from] ElevationError),
    #[error("steps {steps:?} are awaiting elevation")]
    UnresolvedElevation { steps: Vec<usize>, elevation_ids: Vec<String> },
    #[error("audit trace write failed: {0}")]
    Storage(#[from] TraceError),
}

impl GatewayError {
    pub fn status(&self) -> u16 {
        match self {
            GatewayError::UnknownSession(_)
            | GatewayError::UnknownPlan(_)
            | GatewayError::Elevation(ElevationError::UnknownElevation(_)) => 404,
            GatewayError::Elevation(ElevationError::AlreadySettled { .. })
            | GatewayError::Plan(PlanError::DuplicatePlanId(_)) => 409,
            GatewayError::UnresolvedElevation { .. } => 423,
            GatewayError::Storage(_) => 500,
            _ => 400,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::Format(_) => "Format",
            GatewayError::InvalidProfile(_) => "InvalidProfile",
            GatewayError::MissingProfile => "MissingProfile",
            GatewayError::InvalidGoal(_) => "InvalidGoal",
            GatewayError::Plan(PlanError::DuplicatePlanId(_)) => "DuplicatePlanId",
            GatewayError::Plan(_) => "PlanFormatError",
            GatewayError::Pipeline(_) => "PlanFormatError",
            GatewayError::UnknownSession(_) => "UnknownSession",
            GatewayError::UnknownPlan(_) => "UnknownPlan",
            GatewayError::Elevation(ElevationError::UnknownElevation(_)) => "UnknownElevation",
            GatewayError::Elevation(ElevationError::AlreadySettled { .. }) => "AlreadySettled",
            GatewayError::Elevation(ElevationError::EmptyRationale) => "EmptyRationale",
            GatewayError::Elevation(ElevationError::NotElevate(_)) => "NotElevate",
            GatewayError::UnresolvedElevation { .. } => "UnresolvedElevation",
            GatewayError::Storage(_) => "StorageFailure",
        }
    }

    pub fn details(&self) -> Option<Value> {
        match self {
            GatewayError::InvalidProfile(errors) => Some(json!(errors.0)),
            GatewayError::UnresolvedElevation { steps, elevation_ids } => {
                Some(json!({"steps": steps, "elevation_ids": elevation_ids}))
            }
            GatewayError::Elevation(ElevationError::AlreadySettled { id, state }) => {
                Some(json!({"elevation_id": id, "state": state}))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub goal: String,
    #[serde(default)]
    pub session_label: Option<String>,
    #[serde(default)]
    pub profile: Option<Value>,
    #[serde(default)]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionDescriptor {
    pub session_id: String,
    pub goal: Goal,
    pub profile: BoundaryProfile,
    pub created_at: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRequest {
    pub decision: ElevationDecision,
    pub actor: String,
    #[serde(default)]
    pub rationale: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecuteRequest {
    pub plan_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceView {
    pub session_id: String,
    pub head_hash: String,
    pub records: Vec<TraceRecord>,
}

pub struct Session {
    descriptor: SessionDescriptor,
    plans: BTreeMap<String, AnnotatedPlan>,
    host: HostState,
    trace: Trace,
    next_plan: u64,
}

impl Session {
    pub fn descriptor(&self) -> &SessionDescriptor {
        &self.descriptor
    }

    pub fn host(&self) -> &HostState {
        &self.host
    }

    pub fn plan(&self, plan_id: &str) -> Option<&AnnotatedPlan> {
        self.plans.get(plan_id)
    }
}

pub type TraceFactory = Box<dyn Fn(&str) -> Result<Trace, TraceError> + Send + Sync>;

type SessionRef = Arc<Mutex<Session>>;

/// Shared gateway state. Lock order is session, then registry, then the
/// event hub; the registry is only touched for a session while that
/// session's lock is held.
pub struct Gateway {
    engine: Engine,
    clock: Arc<dyn Clock>,
    fixture: HostState,
    fallback: Strictness,
    traces_dir: PathBuf,
    trace_factory: TraceFactory,
    sessions: RwLock<BTreeMap<String, SessionRef>>,
    registry: Mutex<ElevationRegistry>,
    hub: Arc<EventHub>,
    next_session: AtomicU64,
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().expect("gateway lock poisoned")
}

impl Gateway {
    /// Traces go to `<traces_dir>/<session_id>.jsonl`.
    pub fn new(engine: Engine, traces_dir: PathBuf, clock: Arc<dyn Clock>) -> Gateway {
        let dir = traces_dir.clone();
        Gateway {
            engine,
            registry: Mutex::new(ElevationRegistry::new(Arc::clone(&clock))),
            clock,
            fixture: HostState::default(),
            fallback: Strictness::Strict,
            traces_dir,
            trace_factory: Box::new(move |id| Trace::open(&dir.join(format!("{id}.jsonl")))),
            sessions: RwLock::new(BTreeMap::new()),
            hub: Arc::new(EventHub::default()),
            next_session: AtomicU64::new(1),
        }
    }

    pub fn from_config(config: &GatewayConfig) -> Result<Gateway, ConfigError> {
        let gw = Gateway::new(config.build_engine()?, config.traces_dir(), Arc::new(SystemClock))
            .with_fixture(config.host_fixture()?)
            .with_fallback(config.strictness);
        Ok(gw)
    }

    pub fn with_fixture(mut self, fixture: HostState) -> Gateway {
        self.fixture = fixture;
        self
    }

    /// Strictness of the preset used when a session names no profile.
    /// `Strict` means no fallback.
    pub fn with_fallback(mut self, strictness: Strictness) -> Gateway {
        self.fallback = strictness;
        self
    }

    pub fn with_trace_factory(mut self, factory: TraceFactory) -> Gateway {
        self.trace_factory = factory;
        self
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn hub(&self) -> &Arc<EventHub> {
        &self.hub
    }

    pub fn now(&self) -> u64 {
        self.clock.now_ms()
    }

    fn session(&self, session_id: &str) -> Result<SessionRef, GatewayError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(session_id)
            .cloned()
            .ok_or_else(|| GatewayError::UnknownSession(session_id.to_string()))
    }

    pub fn with_session<T>(&self, session_id: &str, f: impl FnOnce(&Session) -> T) -> Result<T, GatewayError> {
        let s = self.session(session_id)?;
        let guard = lock(&s);
        Ok(f(&guard))
    }

    fn append(&self, session: &mut Session, kind: TraceKind, payload: Value) -> Result<TraceRecord, GatewayError> {
        let id = session.descriptor.session_id.clone();
        let record = session.trace.append(self.now(), &id, kind, payload)?;
        self.hub.publish(&record);
        Ok(record)
    }

    fn record_transitions(&self, session: &mut Session, transitions: Vec<Transition>) -> Result<(), GatewayError> {
        for t in transitions {
            let (kind, request) = match t {
                Transition::Opened(r) => (TraceKind::ElevationOpened, r),
                Transition::Decided(r) => (TraceKind::ElevationDecided, r),
                Transition::Expired(r) => (TraceKind::ElevationExpired, r),
            };
            self.append(session, kind, json!({ "elevation": request }))?;
        }
        Ok(())
    }

    fn resolve_profile(&self, req: &CreateSession) -> Result<(BoundaryProfile, String), GatewayError> {
        match (&req.profile, &req.preset) {
            (Some(_), Some(_)) => Err(GatewayError::Format("give a profile or a preset, not both".into())),
            (Some(doc), None) => Ok((validate_profile(doc).map_err(GatewayError::InvalidProfile)?, "document".into())),
            (None, Some(name)) => BoundaryProfile::preset_by_name(name)
                .map(|p| (p, format!("preset:{name}")))
                .ok_or_else(|| GatewayError::Format(format!("unknown preset {name:?}"))),
            (None, None) if self.fallback == Strictness::Strict => Err(GatewayError::MissingProfile),
            (None, None) => Ok((BoundaryProfile::preset(self.fallback), format!("fallback:{}", self.fallback))),
        }
    }

    fn fresh_session_id(&self) -> String {
        loop {
            let n = self.next_session.fetch_add(1, Ordering::SeqCst);
            let id = format!("ses-{n:06}");
            let taken = self.sessions.read().expect("session map lock").contains_key(&id)
                || self.traces_dir.join(format!("{id}.jsonl")).exists();
            if !taken {
                return id;
            }
        }
    }

    pub fn create_session(&self, req: CreateSession) -> Result<SessionDescriptor, GatewayError> {
        let label = req.session_label.clone().unwrap_or_else(|| "session".into());
        let goal = Goal::new(req.goal.clone(), label)?;
        let (profile, source) = self.resolve_profile(&req)?;
        let session_id = self.fresh_session_id();
        let trace = (self.trace_factory)(&session_id)?;
        let descriptor = SessionDescriptor { session_id: session_id.clone(), goal, profile, created_at: self.now() };
        let mut session =
            Session { descriptor: descriptor.clone(), plans: BTreeMap::new(), host: self.fixture.clone(), trace, next_plan: 1 };
        self.append(&mut session, TraceKind::GoalIntake, json!({ "goal": descriptor.goal }))?;
        self.append(&mut session, TraceKind::ProfileBound, json!({ "profile": descriptor.profile, "source": source }))?;
        self.sessions.write().expect("session map lock").insert(session_id, Arc::new(Mutex::new(session)));
        Ok(descriptor)
    }

    /// Parses, classifies and judges the plan, opening one elevation
    /// request per Elevate step.
    pub fn submit_plan(&self, session_id: &str, document: Value) -> Result<AnnotatedPlan, GatewayError> {
        let mut doc: PlanDocument =
            serde_json::from_value(document).map_err(|e| GatewayError::Plan(PlanError::Format(e.to_string())))?;
        let s = self.session(session_id)?;
        let mut session = lock(&s);
        let mut generated = None;
        if doc.plan_id.is_none() {
            let mut n = session.next_plan;
            while session.plans.contains_key(&format!("plan-{n}")) {
                n += 1;
            }
            generated = Some(n);
            doc.plan_id = Some(format!("plan-{n}"));
        }
        let plan = Plan::from_document(doc)?;
        if session.plans.contains_key(&plan.plan_id) {
            return Err(PlanError::DuplicatePlanId(plan.plan_id).into());
        }
        let profile = session.descriptor.profile.clone();
        let mut annotated = self.engine.annotate(&plan, &profile)?;

        let transitions = {
            let mut registry = lock(&self.registry);
            for step in &mut annotated.steps {
                if step.step.verdict.as_ref().map(|v| v.decision) == Some(Decision::Elevate) {
                    let request = registry
                        .open_request(session_id, &annotated.plan_id, &step.step, &profile, step.explanation.clone())
                        .expect("verdict is Elevate");
                    step.step.verdict.as_mut().unwrap().elevation_id = Some(request.elevation_id);
                }
            }
            registry.drain_transitions()
        };
        if let Err(e) = self.trace_submission(&mut session, &annotated, transitions) {
            let mut registry = lock(&self.registry);
            for step in &annotated.steps {
                if let Some(id) = step.step.verdict.as_ref().and_then(|v| v.elevation_id.as_deref()) {
                    registry.withdraw(id);
                }
            }
            return Err(e);
        }
        if let Some(n) = generated {
            session.next_plan = n + 1;
        }
        session.plans.insert(annotated.plan_id.clone(), annotated.clone());
        Ok(annotated)
    }

    fn trace_submission(
        &self,
        session: &mut Session,
        plan: &AnnotatedPlan,
        transitions: Vec<Transition>,
    ) -> Result<(), GatewayError> {
        let steps: Vec<&str> = plan.steps.iter().map(|s| s.step.raw.as_str()).collect();
        let rationales: Vec<Option<&str>> = plan.steps.iter().map(|s| s.step.rationale.as_deref()).collect();
        self.append(
            session,
            TraceKind::PlanSubmitted,
            json!({"plan_id": plan.plan_id, "goal": plan.goal, "cwd": plan.cwd, "steps": steps, "rationales": rationales}),
        )?;
        let mut opened: BTreeMap<usize, Transition> = transitions
            .into_iter()
            .map(|t| match &t {
                Transition::Opened(r) | Transition::Decided(r) | Transition::Expired(r) => (r.step_index, t),
            })
            .collect();
        for s in &plan.steps {
            let step = &s.step;
            self.append(
                session,
                TraceKind::StepFindings,
                json!({
                    "plan_id": plan.plan_id, "step_index": step.index, "raw": step.raw,
                    "actions": step.actions, "diagnostics": step.diagnostics, "findings": step.findings,
                }),
            )?;
            self.append(
                session,
                TraceKind::StepVerdict,
                json!({"plan_id": plan.plan_id, "step_index": step.index, "verdict": step.verdict, "explanation": s.explanation}),
            )?;
            if let Some(t) = opened.remove(&step.index) {
                self.record_transitions(session, vec![t])?;
            }
        }
        Ok(())
    }

    pub fn list_elevations(&self, state: Option<ElevationState>, session_id: Option<&str>) -> Vec<ElevationRequest> {
        let mut list = lock(&self.registry).list(state);
        if let Some(s) = session_id {
            list.retain(|r| r.session_id == s);
        }
        list
    }

    pub fn decide(&self, elevation_id: &str, req: DecisionRequest) -> Result<ElevationRequest, GatewayError> {
        if req.actor.trim().is_empty() {
            return Err(GatewayError::Format("actor must not be empty".into()));
        }
        let session_id = lock(&self.registry)
            .get(elevation_id)
            .map(|r| r.session_id.clone())
            .ok_or_else(|| ElevationError::UnknownElevation(elevation_id.to_string()))?;
        let s = self.session(&session_id)?;
        let mut session = lock(&s);
        let (snapshot, outcome, transitions) = {
            let mut registry = lock(&self.registry);
            // A request can vanish if the submission that opened it failed.
            let Some(snapshot) = registry.get(elevation_id).cloned() else {
                return Err(ElevationError::UnknownElevation(elevation_id.to_string()).into());
            };
            let outcome = registry.decide(elevation_id, req.decision, &req.actor, req.rationale.as_deref().unwrap_or(""));
            (snapshot, outcome, registry.drain_transitions())
        };
        if let Err(e) = self.record_transitions(&mut session, transitions) {
            lock(&self.registry).restore(snapshot);
            return Err(e);
        }
        Ok(outcome?)
    }

    /// Expires due requests of one session and traces the expiries.
    fn sweep(&self, session: &mut Session) -> Result<usize, GatewayError> {
        let transitions = {
            let mut registry = lock(&self.registry);
            let now = self.clock.now_ms();
            registry.expire_session(&session.descriptor.session_id, now);
            registry.drain_transitions()
        };
        let n = transitions.len();
        self.record_transitions(session, transitions)?;
        Ok(n)
    }

    /// One expiry pass over every session. Returns how many requests
    /// expired.
    pub fn expire_tick(&self) -> Result<usize, GatewayError> {
        let sessions: Vec<SessionRef> = self.sessions.read().expect("session map lock").values().cloned().collect();
        let mut total = 0;
        for s in sessions {
            total += self.sweep(&mut lock(&s))?;
        }
        Ok(total)
    }

    pub fn execute(&self, session_id: &str, req: ExecuteRequest) -> Result<ExecutionReport, GatewayError> {
        let s = self.session(session_id)?;
        let mut session = lock(&s);
        self.sweep(&mut session)?;
        let plan = session.plans.get(&req.plan_id).cloned().ok_or_else(|| GatewayError::UnknownPlan(req.plan_id.clone()))?;
        let (effective, pending_ids): (Vec<EffectiveVerdict>, Vec<String>) = {
            let registry = lock(&self.registry);
            let mut pending = Vec::new();
            let effective = plan
                .steps
                .iter()
                .map(|s| {
                    let verdict = s.step.verdict.as_ref().expect("annotated");
                    let request = verdict.elevation_id.as_deref().and_then(|id| registry.get(id));
                    let e = EffectiveVerdict::from_decision(verdict.decision, request);
                    if e == EffectiveVerdict::Pending {
                        pending.push(verdict.elevation_id.clone().unwrap_or_default());
                    }
                    e
                })
                .collect();
            (effective, pending)
        };
        let report = match run_plan(&session.host, &plan.to_plan(), &effective, &session.descriptor.profile, self.engine.domain_table()) {
            Ok(r) => r,
            Err(SimError::UnresolvedElevation(steps)) => {
                return Err(GatewayError::UnresolvedElevation { steps, elevation_ids: pending_ids })
            }
            Err(SimError::VerdictCount { .. }) => unreachable!("one verdict per step"),
        };
        for step in &report.steps {
            let violations: Vec<_> = report.violations.iter().filter(|v| v.step_index == step.step_index).collect();
            match &step.outcome {
                StepOutcome::Executed { delta, human_override } => self.append(
                    &mut session,
                    TraceKind::ExecutionDelta,
                    json!({"plan_id": plan.plan_id, "step_index": step.step_index, "delta": delta,
                           "human_override": human_override, "violations": violations}),
                )?,
                StepOutcome::Skipped { verdict } => self.append(
                    &mut session,
                    TraceKind::ExecutionSkipped,
                    json!({"plan_id": plan.plan_id, "step_index": step.step_index, "verdict": verdict}),
                )?,
            };
        }
        session.host = report.final_state.clone();
        Ok(report)
    }

    pub fn trace(&self, session_id: &str, filter: TraceFilter) -> Result<TraceView, GatewayError> {
        let s = self.session(session_id)?;
        let session = lock(&s);
        Ok(TraceView {
            session_id: session_id.to_string(),
            head_hash: session.trace.head_hash().to_string(),
            records: session.trace.query(&TraceFilter { session_id: None, ..filter }),
        })
    }
}
