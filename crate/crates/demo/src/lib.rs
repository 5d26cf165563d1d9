//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export takes and returns JSON text. The plain functions below do the
//! work so they can be tested natively; the `#[wasm_bindgen]` wrappers only
//! convert errors.

use bgate_core::audit_trace::{verify_bytes, Verification};
use bgate_core::plan_model::{compare_profiles, field_orders, load_plan, validate_profile, BoundaryProfile};
use bgate_core::Engine;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn profile_from(text: &str) -> Result<BoundaryProfile, String> {
    let trimmed = text.trim();
    if let Some(p) = BoundaryProfile::preset_by_name(trimmed) {
        return Ok(p);
    }
    let doc: Value = serde_json::from_str(trimmed).map_err(|e| format!("profile is neither a preset name nor JSON: {e}"))?;
    validate_profile(&doc).map_err(|e| e.to_string())
}

/// Profile document of a named preset.
pub fn preset_document(name: &str) -> Result<String, String> {
    let p = BoundaryProfile::preset_by_name(name).ok_or_else(|| format!("unknown preset {name:?}"))?;
    Ok(serde_json::to_string_pretty(&p.to_document()).expect("profile serializes"))
}

/// Annotates a plan document under a preset name or profile document.
/// `steps` may also be given as newline-separated text.
pub fn check(plan: &str, profile: &str) -> Result<String, String> {
    let profile = profile_from(profile)?;
    let doc = match serde_json::from_str::<Value>(plan) {
        Ok(v @ Value::Object(_)) => v,
        _ => {
            let steps: Vec<&str> = plan.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
            json!({"plan_id": "demo", "steps": steps})
        }
    };
    let plan = load_plan(&doc).map_err(|e| e.to_string())?;
    let annotated = Engine::default().annotate(&plan, &profile).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&annotated).expect("plan serializes"))
}

/// Orders profile `a` against `b`, overall and per field.
pub fn compare(a: &str, b: &str) -> Result<String, String> {
    let (a, b) = (profile_from(a)?, profile_from(b)?);
    let fields: serde_json::Map<String, Value> = field_orders(&a, &b)
        .into_iter()
        .map(|(name, ord)| {
            let label = match ord {
                Some(std::cmp::Ordering::Less) => "tighter",
                Some(std::cmp::Ordering::Greater) => "looser",
                Some(std::cmp::Ordering::Equal) => "equal",
                None => "incomparable",
            };
            (name.to_string(), json!(label))
        })
        .collect();
    Ok(json!({"ordering": compare_profiles(&a, &b), "fields": fields}).to_string())
}

/// Verifies JSONL trace text.
pub fn verify(trace: &str) -> String {
    match verify_bytes(trace.as_bytes()) {
        Verification::Ok(records) => json!({
            "ok": true,
            "records": records.len(),
            "head_hash": records.last().map(|r| r.hash.clone()),
        }),
        Verification::FirstBadIndex(i) => json!({"ok": false, "first_bad_index": i}),
    }
    .to_string()
}

/// Small sample trace for the verify panel.
pub fn sample_trace() -> String {
    let mut t = bgate_core::audit_trace::Trace::in_memory();
    let kinds = [
        bgate_core::audit_trace::TraceKind::GoalIntake,
        bgate_core::audit_trace::TraceKind::ProfileBound,
        bgate_core::audit_trace::TraceKind::StepVerdict,
    ];
    for (i, kind) in kinds.into_iter().enumerate() {
        t.append(1_700_000_000_000 + i as u64, "ses-000001", kind, json!({"step": i})).expect("in-memory append");
    }
    t.records().iter().map(|r| r.to_line() + "\n").collect()
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = presetDocument)]
pub fn preset_document_js(name: &str) -> Result<String, JsError> {
    js(preset_document(name))
}

#[wasm_bindgen(js_name = checkPlan)]
pub fn check_js(plan: &str, profile: &str) -> Result<String, JsError> {
    js(check(plan, profile))
}

#[wasm_bindgen(js_name = compareProfiles)]
pub fn compare_js(a: &str, b: &str) -> Result<String, JsError> {
    js(compare(a, b))
}

#[wasm_bindgen(js_name = verifyTrace)]
pub fn verify_js(trace: &str) -> String {
    verify(trace)
}

#[wasm_bindgen(js_name = sampleTrace)]
pub fn sample_trace_js() -> String {
    sample_trace()
}
