//! Simulation trace records and line-delimited output.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::Action;
use crate::scoring::Typology;

/// One message and its outcome. Times are seconds from the start of the run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: u64,
    pub debtor_id: String,
    pub typology: Typology,
    pub action: Action,
    pub sent_at: i64,
    pub reacted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reacted_at: Option<i64>,
    pub paid: bool,
}

/// Receives trace records as a run progresses.
pub trait TraceSink {
    /// Sinks that drop everything return false so the engine can skip
    /// building records.
    fn enabled(&self) -> bool {
        true
    }

    fn record(&mut self, record: &TraceRecord) -> Result<()>;
}

pub struct NullSink;

impl TraceSink for NullSink {
    fn enabled(&self) -> bool {
        false
    }

    fn record(&mut self, _: &TraceRecord) -> Result<()> {
        Ok(())
    }
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, record: &TraceRecord) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

pub struct JsonlSink<W: Write> {
    writer: W,
    what: String,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(writer: W, what: impl Into<String>) -> Self {
        JsonlSink {
            writer,
            what: what.into(),
        }
    }

    pub fn into_inner(self) -> W {
        self.writer
    }
}

impl<W: Write> TraceSink for JsonlSink<W> {
    fn record(&mut self, record: &TraceRecord) -> Result<()> {
        serde_json::to_writer(&mut self.writer, record)?;
        self.writer
            .write_all(b"\n")
            .map_err(|e| Error::io(self.what.clone(), e))
    }
}

pub fn read_trace(reader: impl BufRead) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("trace line {}", i + 1), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Input(format!("trace line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// Index of the message a reaction at `at` belongs to: the latest message
/// sent at or before it. `sent` must be sorted. `None` if the reaction comes
/// before every message.
pub fn attribute(sent: &[i64], at: i64) -> Option<usize> {
    sent.partition_point(|&t| t <= at).checked_sub(1)
}
