//! Append-only, SHA-256 hash-chained trace stored as JSONL.
//!
//! Each line is the canonical JSON of a record: object keys sorted, no
//! whitespace. `hash` covers the canonical JSON of the record without its
//! `hash` field, and `prev_hash` links to the previous line.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const GENESIS_HASH: &str = "0000000000000000000000000000000000000000000000000000000000000000";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TraceKind {
    GoalIntake,
    ProfileBound,
    PlanSubmitted,
    StepFindings,
    StepVerdict,
    ElevationOpened,
    ElevationDecided,
    ElevationExpired,
    ExecutionDelta,
    ExecutionSkipped,
}

impl TraceKind {
    pub const ALL: [TraceKind; 10] = [
        TraceKind::GoalIntake,
        TraceKind::ProfileBound,
        TraceKind::PlanSubmitted,
        TraceKind::StepFindings,
        TraceKind::StepVerdict,
        TraceKind::ElevationOpened,
        TraceKind::ElevationDecided,
        TraceKind::ElevationExpired,
        TraceKind::ExecutionDelta,
        TraceKind::ExecutionSkipped,
    ];

    pub fn parse(name: &str) -> Option<TraceKind> {
        TraceKind::ALL.into_iter().find(|k| format!("{k:?}") == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub seq: u64,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
    pub session_id: String,
    pub kind: TraceKind,
    pub payload: Value,
    pub prev_hash: String,
    pub hash: String,
}

impl TraceRecord {
    fn hashed_part(&self) -> Value {
        serde_json::json!({
            "seq": self.seq,
            "timestamp": self.timestamp,
            "session_id": self.session_id,
            "kind": self.kind,
            "payload": self.payload,
            "prev_hash": self.prev_hash,
        })
    }

    pub fn compute_hash(&self) -> String {
        hex::encode(Sha256::digest(canonical_json(&self.hashed_part()).as_bytes()))
    }

    /// The exact JSONL line for this record, without the newline.
    pub fn to_line(&self) -> String {
        canonical_json(&serde_json::to_value(self).expect("record serializes"))
    }
}

/// Sorted keys, minimal separators. Strings and numbers use serde_json's
/// encoding.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(v, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace append not acknowledged: {0}")]
    StorageFailure(#[source] io::Error),
    #[error("trace unreadable: {0}")]
    UnreadableTrace(#[source] io::Error),
    #[error("existing trace fails verification at seq {0}")]
    Corrupt(u64),
}

enum Sink {
    Memory,
    File(File),
    Writer(Box<dyn Write + Send>),
}

/// A single writer for one trace. Records are kept in memory as well so
/// queries do not re-read the file.
pub struct Trace {
    sink: Sink,
    path: Option<PathBuf>,
    records: Vec<TraceRecord>,
}

impl std::fmt::Debug for Trace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trace").field("path", &self.path).field("records", &self.records.len()).finish()
    }
}

impl Trace {
    pub fn in_memory() -> Trace {
        Trace { sink: Sink::Memory, path: None, records: Vec::new() }
    }

    /// Writes lines to an arbitrary writer, flushing after each append.
    pub fn with_writer(writer: Box<dyn Write + Send>) -> Trace {
        Trace { sink: Sink::Writer(writer), path: None, records: Vec::new() }
    }

    /// Opens `path` for append, creating it if needed. An existing file must
    /// verify; the chain continues from its last record.
    pub fn open(path: &Path) -> Result<Trace, TraceError> {
        let records = if path.exists() {
            let file = File::open(path).map_err(TraceError::UnreadableTrace)?;
            match verify_reader(file)? {
                Verification::Ok(records) => records,
                Verification::FirstBadIndex(seq) => return Err(TraceError::Corrupt(seq)),
            }
        } else {
            Vec::new()
        };
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(TraceError::StorageFailure)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(TraceError::StorageFailure)?;
        Ok(Trace { sink: Sink::File(file), path: Some(path.to_path_buf()), records })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn head_hash(&self) -> &str {
        self.records.last().map(|r| r.hash.as_str()).unwrap_or(GENESIS_HASH)
    }

    /// Seals and durably writes one record. On failure nothing is added to
    /// the in-memory chain.
    pub fn append(
        &mut self,
        timestamp: u64,
        session_id: &str,
        kind: TraceKind,
        payload: Value,
    ) -> Result<TraceRecord, TraceError> {
        let mut record = TraceRecord {
            seq: self.records.len() as u64,
            timestamp,
            session_id: session_id.to_string(),
            kind,
            payload,
            prev_hash: self.head_hash().to_string(),
            hash: String::new(),
        };
        record.hash = record.compute_hash();
        let mut line = record.to_line();
        line.push('\n');
        match &mut self.sink {
            Sink::Memory => {}
            Sink::File(f) => {
                f.write_all(line.as_bytes()).and_then(|_| f.sync_data()).map_err(TraceError::StorageFailure)?;
            }
            Sink::Writer(w) => {
                w.write_all(line.as_bytes()).and_then(|_| w.flush()).map_err(TraceError::StorageFailure)?;
            }
        }
        self.records.push(record.clone());
        Ok(record)
    }

    pub fn query(&self, filter: &TraceFilter) -> Vec<TraceRecord> {
        query(&self.records, filter)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceFilter {
    pub session_id: Option<String>,
    pub kind: Option<TraceKind>,
    /// Inclusive bounds.
    pub seq_from: Option<u64>,
    pub seq_to: Option<u64>,
}

pub fn query(records: &[TraceRecord], filter: &TraceFilter) -> Vec<TraceRecord> {
    let mut out: Vec<TraceRecord> = records
        .iter()
        .filter(|r| filter.session_id.as_ref().is_none_or(|s| &r.session_id == s))
        .filter(|r| filter.kind.is_none_or(|k| r.kind == k))
        .filter(|r| filter.seq_from.is_none_or(|s| r.seq >= s))
        .filter(|r| filter.seq_to.is_none_or(|s| r.seq <= s))
        .cloned()
        .collect();
    out.sort_by_key(|r| r.seq);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verification {
    Ok(Vec<TraceRecord>),
    FirstBadIndex(u64),
}

/// Checks every line in order: it must parse, re-serialize to the same
/// bytes, carry the expected seq and prev_hash, and hash correctly.
pub fn verify_bytes(bytes: &[u8]) -> Verification {
    let mut records = Vec::new();
    let mut prev = GENESIS_HASH.to_string();
    let body = match bytes.last() {
        None => return Verification::Ok(records),
        Some(b'\n') => &bytes[..bytes.len() - 1],
        // A complete trace always ends in a newline.
        Some(_) => bytes,
    };
    let complete = bytes.last() == Some(&b'\n');
    let lines: Vec<&[u8]> = body.split(|b| *b == b'\n').collect();
    for (i, line) in lines.iter().enumerate() {
        let seq = i as u64;
        let ok = std::str::from_utf8(line)
            .ok()
            .and_then(|text| serde_json::from_str::<TraceRecord>(text).ok().map(|r| (text, r)))
            .filter(|(text, r)| r.to_line() == *text)
            .filter(|(_, r)| r.seq == seq && r.prev_hash == prev && r.hash == r.compute_hash())
            .map(|(_, r)| r);
        match ok {
            Some(r) if complete || i + 1 < lines.len() => {
                prev = r.hash.clone();
                records.push(r);
            }
            _ => return Verification::FirstBadIndex(seq),
        }
    }
    Verification::Ok(records)
}

pub fn verify_reader(mut reader: impl Read) -> Result<Verification, TraceError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(TraceError::UnreadableTrace)?;
    Ok(verify_bytes(&bytes))
}

pub fn verify_file(path: &Path) -> Result<Verification, TraceError> {
    verify_reader(File::open(path).map_err(TraceError::UnreadableTrace)?)
}

/// Reads records without verifying them; lines that do not parse are
/// skipped.
pub fn read_records(path: &Path) -> Result<Vec<TraceRecord>, TraceError> {
    let file = File::open(path).map_err(TraceError::UnreadableTrace)?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(TraceError::UnreadableTrace)?;
        if let Ok(r) = serde_json::from_str(&line) {
            out.push(r);
        }
    }
    Ok(out)
}
