//! Boundary gate core: turns a host-acting agent's submitted plan into
//! structured actions, tags each action with risky-completion classes,
//! judges every step against the user's boundary profile, tracks human
//! elevation requests, keeps a hash-chained audit trace and simulates
//! execution on a virtual host.
//!
//! The crate is pure and synchronous apart from the file-backed trace
//! writer; the HTTP gateway and the CLI live in sibling crates.

pub mod action_parser;
pub mod audit_trace;
pub mod corpus;
pub mod elevation;
pub mod host_sim;
pub mod paths;
pub mod pipeline;
pub mod plan_model;
pub mod policy_engine;
pub mod risk_classifier;

pub use action_parser::{ActionIr, ActionKind, CommandParser, ParseReport};
pub use plan_model::{
    BoundaryProfile, Decision, Goal, Plan, PlanStep, ProfileOrdering, RiskClass, StepVerdict,
    Strictness,
};
pub use pipeline::{AnnotatedPlan, Engine};
pub use policy_engine::PolicyTable;
pub use risk_classifier::{ClassificationContext, FindingClass, RiskFinding, Severity};
