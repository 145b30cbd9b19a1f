//! Line-delimited JSON case records.
//!
//! One object per line; blank lines are skipped. The schema lives in
//! `schema/case_record.schema.json`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::features::attr;
use super::model::{CaseEvent, DebtorCase, StaticValue, Timestamp};
use crate::error::{Error, Result};

pub const REQUIRED_FIELDS: [&str; 5] = ["case_id", "debtor_id", "main_claim_amount", "fee_amount", "opened_at"];
const OPTIONAL_FIELDS: [&str; 2] = ["static_attrs", "events"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    /// The record was rejected.
    Error,
    /// The record was accepted, possibly after a fix-up.
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// 1-based input line.
    pub line: usize,
    pub severity: Severity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match &self.field {
            Some(field) => write!(f, "line {}: {sev}: {field}: {}", self.line, self.message),
            None => write!(f, "line {}: {sev}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, Default)]
pub struct IngestReport {
    pub cases: Vec<DebtorCase>,
    pub diagnostics: Vec<Diagnostic>,
}

impl IngestReport {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }
}

struct Reject(Option<String>, String);

fn reject(field: impl Into<String>, message: impl Into<String>) -> Reject {
    Reject(Some(field.into()), message.into())
}

fn string_field(obj: &Map<String, Value>, name: &str) -> std::result::Result<String, Reject> {
    match obj.get(name) {
        None => Err(reject(name, "missing required field")),
        Some(Value::String(s)) if !s.is_empty() => Ok(s.clone()),
        Some(Value::String(_)) => Err(reject(name, "must not be empty")),
        Some(other) => Err(reject(name, format!("expected string, found {}", kind_of(other)))),
    }
}

fn amount_field(obj: &Map<String, Value>, name: &str) -> std::result::Result<u64, Reject> {
    match obj.get(name) {
        None => Err(reject(name, "missing required field")),
        Some(Value::Number(n)) => n.as_u64().ok_or_else(|| {
            reject(name, format!("expected a non-negative integer amount in cents, found {n}"))
        }),
        Some(other) => Err(reject(name, format!("expected integer, found {}", kind_of(other)))),
    }
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn parse_record(line: usize, obj: &Map<String, Value>, warnings: &mut Vec<Diagnostic>) -> std::result::Result<DebtorCase, Reject> {
    let case_id = string_field(obj, "case_id")?;
    let debtor_id = string_field(obj, "debtor_id")?;
    let main_claim_amount = amount_field(obj, "main_claim_amount")?;
    let fee_amount = amount_field(obj, "fee_amount")?;
    let opened_raw = string_field(obj, "opened_at")?;
    let opened_at: Timestamp = chrono::DateTime::parse_from_rfc3339(&opened_raw)
        .map_err(|e| reject("opened_at", format!("not an RFC 3339 timestamp: {e}")))?
        .with_timezone(&chrono::Utc);

    let mut warn = |field: String, message: String| {
        warnings.push(Diagnostic {
            line,
            severity: Severity::Warning,
            field: Some(field),
            message,
        })
    };

    for key in obj.keys() {
        if !REQUIRED_FIELDS.contains(&key.as_str()) && !OPTIONAL_FIELDS.contains(&key.as_str()) {
            warn(key.clone(), "unknown field ignored".into());
        }
    }

    let mut static_attrs = BTreeMap::new();
    match obj.get("static_attrs") {
        None | Some(Value::Null) => {}
        Some(Value::Object(map)) => {
            for (name, value) in map {
                let field = format!("static_attrs.{name}");
                let v = match value {
                    Value::Bool(b) => StaticValue::Flag(*b),
                    Value::Number(n) => StaticValue::Number(n.as_f64().unwrap_or(f64::NAN)),
                    Value::Null => continue,
                    other => return Err(reject(field, format!("expected boolean or number, found {}", kind_of(other)))),
                };
                if !attr::ALL.contains(&name.as_str()) {
                    warn(field, "attribute is not read by any feature".into());
                }
                static_attrs.insert(name.clone(), v);
            }
        }
        Some(other) => return Err(reject("static_attrs", format!("expected object, found {}", kind_of(other)))),
    }

    let mut events = Vec::new();
    match obj.get("events") {
        None | Some(Value::Null) => {}
        Some(Value::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                let ev: CaseEvent = serde_json::from_value(item.clone())
                    .map_err(|e| reject(format!("events[{i}]"), e.to_string()))?;
                events.push(ev);
            }
        }
        Some(other) => return Err(reject("events", format!("expected array, found {}", kind_of(other)))),
    }

    let mut case = DebtorCase {
        case_id,
        debtor_id,
        main_claim_amount,
        fee_amount,
        opened_at,
        static_attrs,
        events,
    };
    if !case.is_time_ordered() {
        case.events.sort_by_key(|e| e.timestamp);
        warn("events".into(), "timestamps not in order; events sorted".into());
    }
    Ok(case)
}

/// Read and validate case records. Malformed records are dropped with an
/// error diagnostic; the rest of the stream is still read.
pub fn ingest_cases(reader: impl BufRead) -> Result<IngestReport> {
    let mut report = IngestReport::default();
    let mut ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(format!("line {lineno}"), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                report.diagnostics.push(Diagnostic {
                    line: lineno,
                    severity: Severity::Error,
                    field: None,
                    message: format!("invalid JSON: {e}"),
                });
                continue;
            }
        };
        let Value::Object(obj) = value else {
            report.diagnostics.push(Diagnostic {
                line: lineno,
                severity: Severity::Error,
                field: None,
                message: format!("expected a JSON object, found {}", kind_of(&value)),
            });
            continue;
        };
        let mut warnings = Vec::new();
        match parse_record(lineno, &obj, &mut warnings) {
            Ok(case) => {
                if !ids.insert(case.case_id.clone()) {
                    report.diagnostics.push(Diagnostic {
                        line: lineno,
                        severity: Severity::Error,
                        field: Some("case_id".into()),
                        message: format!("duplicate case_id `{}`", case.case_id),
                    });
                    continue;
                }
                report.diagnostics.extend(warnings);
                report.cases.push(case);
            }
            Err(Reject(field, message)) => {
                report.diagnostics.extend(warnings);
                report.diagnostics.push(Diagnostic {
                    line: lineno,
                    severity: Severity::Error,
                    field,
                    message,
                });
            }
        }
    }
    Ok(report)
}

pub fn ingest_path(path: &Path) -> Result<IngestReport> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    ingest_cases(std::io::BufReader::new(file))
}
