//! Data-driven recognizer rules loaded from JSON.
//!
//! A rule matches word-by-word: literal tokens must be equal, `*` captures
//! one word and a trailing `...` captures the rest. In the payload template
//! `"$1"` is replaced by the first capture as a string, `"#1"` as a number,
//! `"$rest"` by the remainder joined with spaces.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::{classify_interface, ActionKind};
use crate::paths;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionRule {
    pub pattern: String,
    pub kind: String,
    pub payload_template: Value,
}

#[derive(Debug, Error)]
pub enum ExtensionError {
    #[error("rule file is not valid JSON: {0}")]
    Format(#[from] serde_json::Error),
    #[error("rule {index}: {message}")]
    BadRule { index: usize, message: String },
}

#[derive(Debug, Clone, Default)]
pub struct RecognizerExtensions {
    rules: Vec<ExtensionRule>,
}

const KINDS: &[&str] = &[
    "Exec", "FileWrite", "FileRead", "FileDelete", "NetBind", "FirewallChange", "PackageInstall",
    "ServiceControl", "ConfigEdit", "Download",
];

impl RecognizerExtensions {
    pub fn from_json(text: &str) -> Result<RecognizerExtensions, ExtensionError> {
        let rules: Vec<ExtensionRule> = serde_json::from_str(text)?;
        RecognizerExtensions::new(rules)
    }

    pub fn new(rules: Vec<ExtensionRule>) -> Result<RecognizerExtensions, ExtensionError> {
        for (index, rule) in rules.iter().enumerate() {
            let bad = |message: String| ExtensionError::BadRule { index, message };
            let tokens: Vec<&str> = rule.pattern.split_whitespace().collect();
            if tokens.is_empty() {
                return Err(bad("empty pattern".into()));
            }
            if tokens[0] == "*" || tokens[0] == "..." {
                return Err(bad("pattern must start with a literal program name".into()));
            }
            if tokens[..tokens.len() - 1].contains(&"...") {
                return Err(bad("`...` may only end a pattern".into()));
            }
            if !KINDS.contains(&rule.kind.as_str()) {
                return Err(bad(format!("unknown action kind {:?}", rule.kind)));
            }
            if !rule.payload_template.is_object() {
                return Err(bad("payload_template must be an object".into()));
            }
            // Instantiate with placeholder captures to catch schema errors early.
            let captures = Captures { words: vec!["0".into(); 9], rest: String::new() };
            instantiate(rule, &captures, "/", "/").map_err(bad)?;
        }
        Ok(RecognizerExtensions { rules })
    }

    pub fn rules(&self) -> &[ExtensionRule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// First matching rule wins. `None` when no rule matches.
    pub(super) fn apply(&self, words: &[String], cwd: &str, home: &str) -> Option<Result<ActionKind, String>> {
        self.rules.iter().find_map(|rule| {
            let captures = match_pattern(&rule.pattern, words)?;
            Some(instantiate(rule, &captures, cwd, home))
        })
    }
}

struct Captures {
    words: Vec<String>,
    rest: String,
}

fn match_pattern(pattern: &str, words: &[String]) -> Option<Captures> {
    let tokens: Vec<&str> = pattern.split_whitespace().collect();
    let mut captures = Captures { words: Vec::new(), rest: String::new() };
    for (i, token) in tokens.iter().enumerate() {
        match *token {
            "..." => {
                captures.rest = words.get(i..).unwrap_or(&[]).join(" ");
                return Some(captures);
            }
            "*" => captures.words.push(words.get(i)?.clone()),
            literal => {
                let word = words.get(i)?;
                let matches = if i == 0 { paths::file_name(word) == literal || word == literal } else { word == literal };
                if !matches {
                    return None;
                }
            }
        }
    }
    (words.len() == tokens.len()).then_some(captures)
}

fn substitute(value: &Value, captures: &Captures) -> Result<Value, String> {
    Ok(match value {
        Value::String(s) => {
            if s == "$rest" {
                return Ok(Value::String(captures.rest.clone()));
            }
            if let Some(n) = s.strip_prefix('#').and_then(|n| n.parse::<usize>().ok()) {
                let word = capture(captures, n)?;
                let number: u64 = word.parse().map_err(|_| format!("capture {n} ({word:?}) is not a number"))?;
                return Ok(Value::from(number));
            }
            let mut out = s.replace("$rest", &captures.rest);
            for n in (1..=captures.words.len()).rev() {
                out = out.replace(&format!("${n}"), &captures.words[n - 1]);
            }
            Value::String(out)
        }
        Value::Array(items) => Value::Array(items.iter().map(|v| substitute(v, captures)).collect::<Result<_, _>>()?),
        Value::Object(map) => {
            let mut out = Map::new();
            for (k, v) in map {
                out.insert(k.clone(), substitute(v, captures)?);
            }
            Value::Object(out)
        }
        other => other.clone(),
    })
}

fn capture(captures: &Captures, n: usize) -> Result<&str, String> {
    n.checked_sub(1)
        .and_then(|i| captures.words.get(i))
        .map(String::as_str)
        .ok_or_else(|| format!("template refers to missing capture {n}"))
}

fn instantiate(rule: &ExtensionRule, captures: &Captures, cwd: &str, home: &str) -> Result<ActionKind, String> {
    let mut payload = substitute(&rule.payload_template, captures)?;
    if let Value::Object(map) = &mut payload {
        map.insert("kind".into(), Value::String(rule.kind.clone()));
        // Fields that are derived rather than stated.
        if rule.kind == "NetBind" && !map.contains_key("interface_class") {
            map.insert("interface_class".into(), Value::String("Public".into()));
        }
    }
    let mut kind: ActionKind = serde_json::from_value(payload).map_err(|e| format!("payload does not fit {}: {e}", rule.kind))?;
    match &mut kind {
        ActionKind::FileWrite(f) | ActionKind::FileRead(f) | ActionKind::FileDelete(f) => {
            f.path = paths::resolve(&f.path, cwd, home);
        }
        ActionKind::ConfigEdit(c) => c.path = paths::resolve(&c.path, cwd, home),
        ActionKind::Download(d) => {
            if let Some(t) = &mut d.target_path {
                *t = paths::resolve(t, cwd, home);
            }
        }
        ActionKind::NetBind(b) => b.interface_class = classify_interface(&b.address),
        _ => {}
    }
    Ok(kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_parser::{NetBind, ServiceControl, ServiceOp};

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn wildcard_and_rest_capture() {
        let ext = RecognizerExtensions::from_json(
            r#"[{"pattern": "caddy reverse-proxy --from * ...", "kind": "NetBind",
                 "payload_template": {"address": "$1", "port": 0}}]"#,
        )
        .unwrap();
        let got = ext.apply(&words("caddy reverse-proxy --from 0.0.0.0 --to x"), "/work", "/h").unwrap().unwrap();
        assert_eq!(got, ActionKind::NetBind(NetBind::new("0.0.0.0", 0)));
        assert!(ext.apply(&words("caddy run"), "/work", "/h").is_none());
    }

    #[test]
    fn numeric_capture_and_exact_length() {
        let ext = RecognizerExtensions::from_json(
            r##"[{"pattern": "svc up * *", "kind": "NetBind", "payload_template": {"address": "$1", "port": "#2"}}]"##,
        )
        .unwrap();
        let got = ext.apply(&words("svc up 127.0.0.1 9000"), "/", "/h").unwrap().unwrap();
        assert_eq!(got, ActionKind::NetBind(NetBind::new("127.0.0.1", 9000)));
        assert!(ext.apply(&words("svc up 127.0.0.1 9000 extra"), "/", "/h").is_none());
        assert!(ext.apply(&words("svc up 127.0.0.1 nine"), "/", "/h").unwrap().is_err());
    }

    #[test]
    fn program_literal_matches_basename() {
        let ext = RecognizerExtensions::from_json(
            r#"[{"pattern": "supervisorctl restart *", "kind": "ServiceControl",
                 "payload_template": {"service": "$1", "op": "Restart"}}]"#,
        )
        .unwrap();
        let got = ext.apply(&words("/usr/bin/supervisorctl restart web"), "/", "/h").unwrap().unwrap();
        assert_eq!(got, ActionKind::ServiceControl(ServiceControl { service: "web".into(), op: ServiceOp::Restart }));
    }

    #[test]
    fn paths_resolve_against_cwd() {
        let ext = RecognizerExtensions::from_json(
            r#"[{"pattern": "gen out *", "kind": "FileWrite",
                 "payload_template": {"path": "$1", "recursive": false, "force": false}}]"#,
        )
        .unwrap();
        match ext.apply(&words("gen out build/x.bin"), "/work/p", "/h").unwrap().unwrap() {
            ActionKind::FileWrite(f) => assert_eq!(f.path, "/work/p/build/x.bin"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_rules() {
        for text in [
            r#"[{"pattern": "", "kind": "Exec", "payload_template": {}}]"#,
            r#"[{"pattern": "* x", "kind": "Exec", "payload_template": {}}]"#,
            r#"[{"pattern": "a ... b", "kind": "Exec", "payload_template": {}}]"#,
            r#"[{"pattern": "a", "kind": "Unknown", "payload_template": {"raw": "x"}}]"#,
            r#"[{"pattern": "a", "kind": "Teleport", "payload_template": {}}]"#,
            r#"[{"pattern": "a", "kind": "NetBind", "payload_template": {"address": "x"}}]"#,
            r#"[{"pattern": "a", "kind": "Exec", "payload_template": {}, "extra": 1}]"#,
            r#"{"not": "a list"}"#,
        ] {
            assert!(RecognizerExtensions::from_json(text).is_err(), "{text}");
        }
    }
}
