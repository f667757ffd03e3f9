//! JSONL simulation logs.
//!
//! One `tick` record per position-loop tick; mission components append
//! `event` records to the same stream.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::dynamics::RigidBodyState;
use super::SimError;
use crate::messages::SetpointMsg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    /// `(w, x, y, z)`.
    pub orientation: [f64; 4],
    pub body_rates: [f64; 3],
}

impl From<&RigidBodyState> for StateRecord {
    fn from(s: &RigidBodyState) -> Self {
        let q = s.orientation.into_inner();
        Self {
            position: s.position.into(),
            velocity: s.velocity.into(),
            orientation: [q.w, q.i, q.j, q.k],
            body_rates: s.body_rates.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub t: f64,
    pub truth: StateRecord,
    pub estimate: StateRecord,
    pub setpoint: SetpointMsg,
    /// Rotor thrusts, N.
    pub motors: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    pub event: String,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub data: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    Tick(TickRecord),
    Event(EventRecord),
}

impl LogRecord {
    pub fn t(&self) -> f64 {
        match self {
            Self::Tick(r) => r.t,
            Self::Event(r) => r.t,
        }
    }
}

/// Writes one JSON object per line.
pub struct JsonlWriter<W: Write> {
    out: W,
    line: Vec<u8>,
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out, line: Vec::with_capacity(512) }
    }

    pub fn write(&mut self, record: &LogRecord) -> Result<(), SimError> {
        self.line.clear();
        serde_json::to_writer(&mut self.line, record).map_err(|e| SimError::Log(e.to_string()))?;
        self.line.push(b'\n');
        self.out.write_all(&self.line).map_err(|e| SimError::Log(e.to_string()))
    }

    pub fn flush(&mut self) -> Result<(), SimError> {
        self.out.flush().map_err(|e| SimError::Log(e.to_string()))
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Parses a JSONL log; blank lines are skipped.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<LogRecord>, SimError> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| SimError::Log(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| SimError::Log(format!("line {}: {e}", n + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// True-state sample at the rate-loop frequency, kept in memory for grasp
/// evaluation and metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    /// Heading, rad.
    pub yaw: f64,
}

impl TraceSample {
    pub fn speed(&self) -> f64 {
        let [x, y, z] = self.velocity;
        (x * x + y * y + z * z).sqrt()
    }
}
