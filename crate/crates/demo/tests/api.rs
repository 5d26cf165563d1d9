use bgate_demo::{check, compare, preset_document, sample_trace, verify};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn check_accepts_lines_or_documents() {
    let from_lines = parse(&check("ls\n\nsudo systemctl restart nginx\n", "Standard").unwrap());
    assert_eq!(from_lines["steps"].as_array().unwrap().len(), 2);
    assert_eq!(from_lines["plan_verdict"]["decision"], "Elevate");
    assert_eq!(from_lines["plan_verdict"]["blocking_steps"], serde_json::json!([1]));

    let doc = r#"{"plan_id": "x", "steps": ["python3 -m http.server 8000 --bind 0.0.0.0"]}"#;
    let profile = preset_document("Standard").unwrap();
    let from_doc = parse(&check(doc, &profile).unwrap());
    assert_eq!(from_doc["plan_id"], "x");
    assert_eq!(from_doc["plan_verdict"]["decision"], "Deny");
    assert_eq!(from_doc, parse(&check(doc, "Standard").unwrap()));
}

#[test]
fn check_reports_errors() {
    assert!(check("ls", "Lax").unwrap_err().contains("preset"));
    assert!(check("", "Standard").is_err());
    assert!(check("ls", r#"{"scope_paths": 3}"#).is_err());
}

#[test]
fn compare_orders_presets() {
    let v = parse(&compare("Strict", "Permissive").unwrap());
    assert_eq!(v["ordering"], "Tighter");
    assert_eq!(v["fields"]["strictness"], "tighter");
    let v = parse(&compare("Standard", "Standard").unwrap());
    assert_eq!(v["ordering"], "Equal");
    assert_eq!(parse(&compare("Permissive", "Strict").unwrap())["ordering"], "Looser");
}

#[test]
fn verify_finds_the_first_bad_record() {
    let good = sample_trace();
    let v = parse(&verify(&good));
    assert_eq!(v["ok"], true);
    assert_eq!(v["records"], 3);
    let bad = good.replacen("\"step\":1", "\"step\":7", 1);
    assert_ne!(bad, good);
    let v = parse(&verify(&bad));
    assert_eq!(v["ok"], false);
    assert_eq!(v["first_bad_index"], 1);
}
