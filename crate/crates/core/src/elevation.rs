//! Elevation requests for Elevate verdicts: Pending until a human approves
//! or denies, or until the deadline passes (which counts as a denial).

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan_model::{BoundaryProfile, Decision, PlanStep};
use crate::policy_engine::ExplanationRow;
use crate::risk_classifier::RiskFinding;

/// Milliseconds. Only differences and comparisons matter.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
    }
}

/// Settable clock for tests and replays.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start_ms: u64) -> ManualClock {
        ManualClock(AtomicU64::new(start_ms))
    }

    pub fn set(&self, ms: u64) {
        self.0.store(ms, Ordering::SeqCst);
    }

    pub fn advance(&self, ms: u64) {
        self.0.fetch_add(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElevationState {
    Pending,
    Approved,
    Denied,
    Expired,
}

impl ElevationState {
    pub fn parse(name: &str) -> Option<ElevationState> {
        match name.to_ascii_lowercase().as_str() {
            "pending" => Some(ElevationState::Pending),
            "approved" => Some(ElevationState::Approved),
            "denied" => Some(ElevationState::Denied),
            "expired" => Some(ElevationState::Expired),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElevationDecision {
    Approve,
    Deny,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElevationRequest {
    pub elevation_id: String,
    pub session_id: String,
    pub plan_id: String,
    pub step_index: usize,
    pub raw: String,
    pub findings: Vec<RiskFinding>,
    pub explanation: Vec<ExplanationRow>,
    pub created_at: u64,
    pub deadline: u64,
    pub state: ElevationState,
    pub decided_by: Option<String>,
    pub decision_rationale: Option<String>,
}

impl ElevationRequest {
    /// What the request means for execution. Expired fails closed.
    pub fn effective(&self) -> EffectiveVerdict {
        match self.state {
            ElevationState::Pending => EffectiveVerdict::Pending,
            ElevationState::Approved => EffectiveVerdict::ApprovedOverride,
            ElevationState::Denied => EffectiveVerdict::Denied,
            ElevationState::Expired => EffectiveVerdict::Expired,
        }
    }
}

/// A step's verdict after elevation has been taken into account.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EffectiveVerdict {
    Allow,
    /// Allowed because a human approved an Elevate verdict.
    ApprovedOverride,
    Denied,
    Expired,
    Pending,
}

impl EffectiveVerdict {
    pub fn runs(self) -> bool {
        matches!(self, EffectiveVerdict::Allow | EffectiveVerdict::ApprovedOverride)
    }

    /// Allow and Deny map directly; Elevate needs the request.
    pub fn from_decision(decision: Decision, request: Option<&ElevationRequest>) -> EffectiveVerdict {
        match decision {
            Decision::Allow => EffectiveVerdict::Allow,
            Decision::Deny => EffectiveVerdict::Denied,
            Decision::Elevate => request.map(|r| r.effective()).unwrap_or(EffectiveVerdict::Pending),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElevationError {
    #[error("step {0} verdict is not Elevate")]
    NotElevate(usize),
    #[error("unknown elevation {0}")]
    UnknownElevation(String),
    #[error("elevation {id} is already {state:?}")]
    AlreadySettled { id: String, state: ElevationState },
    #[error("a denial needs a rationale")]
    EmptyRationale,
}

/// A state change made by the registry, for the caller to trace and
/// broadcast.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transition {
    Opened(ElevationRequest),
    Decided(ElevationRequest),
    Expired(ElevationRequest),
}

/// Shared registry of requests. Callers serialize access (the gateway
/// keeps it behind a mutex), so transitions are linearized per request.
/// Every transition is queued until the caller drains it.
pub struct ElevationRegistry {
    clock: Arc<dyn Clock>,
    requests: BTreeMap<String, ElevationRequest>,
    next_id: u64,
    transitions: Vec<Transition>,
}

impl ElevationRegistry {
    pub fn new(clock: Arc<dyn Clock>) -> ElevationRegistry {
        ElevationRegistry { clock, requests: BTreeMap::new(), next_id: 1, transitions: Vec::new() }
    }

    pub fn now(&self) -> u64 {
        self.clock.now_ms()
    }

    pub fn open_request(
        &mut self,
        session_id: &str,
        plan_id: &str,
        step: &PlanStep,
        profile: &BoundaryProfile,
        explanation: Vec<ExplanationRow>,
    ) -> Result<ElevationRequest, ElevationError> {
        if step.verdict.as_ref().map(|v| v.decision) != Some(Decision::Elevate) {
            return Err(ElevationError::NotElevate(step.index));
        }
        let created_at = self.clock.now_ms();
        let elevation_id = format!("elv-{:06}", self.next_id);
        self.next_id += 1;
        let request = ElevationRequest {
            elevation_id: elevation_id.clone(),
            session_id: session_id.to_string(),
            plan_id: plan_id.to_string(),
            step_index: step.index,
            raw: step.raw.clone(),
            findings: step.findings.clone(),
            explanation,
            created_at,
            deadline: created_at + profile.confirmation_timeout_s * 1000,
            state: ElevationState::Pending,
            decided_by: None,
            decision_rationale: None,
        };
        self.requests.insert(elevation_id, request.clone());
        self.transitions.push(Transition::Opened(request.clone()));
        Ok(request)
    }

    /// Settles a Pending request. A Pending request whose deadline has
    /// passed is expired first, so a late decision gets AlreadySettled.
    pub fn decide(
        &mut self,
        elevation_id: &str,
        decision: ElevationDecision,
        actor: &str,
        rationale: &str,
    ) -> Result<ElevationRequest, ElevationError> {
        let now = self.clock.now_ms();
        let request = self
            .requests
            .get_mut(elevation_id)
            .ok_or_else(|| ElevationError::UnknownElevation(elevation_id.to_string()))?;
        if decision == ElevationDecision::Deny && rationale.trim().is_empty() {
            return Err(ElevationError::EmptyRationale);
        }
        let wanted = match decision {
            ElevationDecision::Approve => ElevationState::Approved,
            ElevationDecision::Deny => ElevationState::Denied,
        };
        if request.state == ElevationState::Pending && now >= request.deadline {
            request.state = ElevationState::Expired;
            self.transitions.push(Transition::Expired(request.clone()));
        }
        match request.state {
            ElevationState::Pending => {
                request.state = wanted;
                request.decided_by = Some(actor.to_string());
                request.decision_rationale = Some(rationale.to_string()).filter(|r| !r.is_empty());
                self.transitions.push(Transition::Decided(request.clone()));
                Ok(request.clone())
            }
            state if state == wanted => Ok(request.clone()),
            state => Err(ElevationError::AlreadySettled { id: elevation_id.to_string(), state }),
        }
    }

    /// Expires every Pending request with `deadline <= now`.
    pub fn expire(&mut self, now: u64) -> Vec<ElevationRequest> {
        let mut expired = Vec::new();
        for request in self.requests.values_mut() {
            if request.state == ElevationState::Pending && now >= request.deadline {
                request.state = ElevationState::Expired;
                expired.push(request.clone());
                self.transitions.push(Transition::Expired(request.clone()));
            }
        }
        expired
    }

    pub fn expire_due(&mut self) -> Vec<ElevationRequest> {
        let now = self.clock.now_ms();
        self.expire(now)
    }

    /// Like [`expire`](Self::expire), limited to one session.
    pub fn expire_session(&mut self, session_id: &str, now: u64) -> Vec<ElevationRequest> {
        let mut expired = Vec::new();
        for request in self.requests.values_mut().filter(|r| r.session_id == session_id) {
            if request.state == ElevationState::Pending && now >= request.deadline {
                request.state = ElevationState::Expired;
                expired.push(request.clone());
                self.transitions.push(Transition::Expired(request.clone()));
            }
        }
        expired
    }

    /// Puts back an earlier snapshot of a request, for callers that must
    /// undo a change they could not record.
    pub fn restore(&mut self, request: ElevationRequest) {
        self.requests.insert(request.elevation_id.clone(), request);
    }

    /// Drops a request that was opened but could not be recorded.
    pub fn withdraw(&mut self, elevation_id: &str) {
        self.requests.remove(elevation_id);
    }

    pub fn drain_transitions(&mut self) -> Vec<Transition> {
        std::mem::take(&mut self.transitions)
    }

    pub fn get(&self, elevation_id: &str) -> Option<&ElevationRequest> {
        self.requests.get(elevation_id)
    }

    pub fn list(&self, state: Option<ElevationState>) -> Vec<ElevationRequest> {
        self.requests.values().filter(|r| state.is_none_or(|s| r.state == s)).cloned().collect()
    }

    pub fn for_step(&self, session_id: &str, plan_id: &str, step_index: usize) -> Option<&ElevationRequest> {
        // Latest request wins if a plan is resubmitted under the same id.
        self.requests
            .values()
            .filter(|r| r.session_id == session_id && r.plan_id == plan_id && r.step_index == step_index)
            .max_by(|a, b| a.created_at.cmp(&b.created_at).then(a.elevation_id.cmp(&b.elevation_id)))
    }
}
