use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

use crate::safety::GateRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Meta,
    Auto,
    Qa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    AwaitingInput,
    AwaitingAck,
    RunningTool,
    Completed,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Responder {
    User,
    Autopilot,
    System,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnKind {
    /// Accepted answer; a transition was taken.
    Answer,
    /// Organism answer held until the germline warning is acknowledged.
    PendingAck,
    Acknowledgment,
    /// Input or tool failure; the state did not change.
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnError {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionTurn {
    pub index: usize,
    pub task: String,
    pub state_id: String,
    pub rendered_instruction: String,
    pub responder: Responder,
    pub response: String,
    pub kind: TurnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_output: Option<Value>,
    /// Set only on turns that transitioned.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_state: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<TurnError>,
    /// Agent reasoning for autopilot turns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
    /// Artifact keys this turn replaced (autofilled or earlier values).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<String>,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactSource {
    /// Extracted from the session request.
    Autofill,
    Answer,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub value: Value,
    pub source: ArtifactSource,
    /// Turn that wrote the value (absent for autofill).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Position {
    pub task_index: usize,
    pub state_id: String,
}

/// Warning held while an organism answer awaits acknowledgment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingGate {
    pub state_id: String,
    pub answer: String,
    pub warning: String,
    pub moratorium_reference: String,
}

/// Everything needed to recreate a session before its first turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub session_id: String,
    pub mode: Mode,
    pub plan: Vec<String>,
    /// The request as received, with long nucleotide runs redacted.
    pub request: String,
    pub created_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub header: SessionHeader,
    pub position: Option<Position>,
    pub history: Vec<InteractionTurn>,
    pub artifacts: BTreeMap<String, Artifact>,
    pub status: Status,
    pub gates: Vec<GateRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending_gate: Option<PendingGate>,
    /// Set by store recovery when the log ended in an unreadable line.
    #[serde(default)]
    pub needs_review: bool,
    last_ms: u64,
}

impl Session {
    pub(crate) fn new(header: SessionHeader, position: Option<Position>, status: Status) -> Self {
        let last_ms = header.created_ms;
        Self {
            header,
            position,
            history: Vec::new(),
            artifacts: BTreeMap::new(),
            status,
            gates: Vec::new(),
            pending_gate: None,
            needs_review: false,
            last_ms,
        }
    }

    pub fn id(&self) -> &str {
        &self.header.session_id
    }

    pub fn mode(&self) -> Mode {
        self.header.mode
    }

    pub fn task_queue(&self) -> &[String] {
        &self.header.plan
    }

    pub fn current_state(&self) -> Option<&str> {
        self.position.as_ref().map(|p| p.state_id.as_str())
    }

    pub fn current_task(&self) -> Option<&str> {
        self.position
            .as_ref()
            .and_then(|p| self.header.plan.get(p.task_index))
            .map(String::as_str)
    }

    pub fn artifact(&self, key: &str) -> Option<&Value> {
        self.artifacts.get(key).map(|a| &a.value)
    }

    pub fn artifact_text(&self, key: &str) -> Option<&str> {
        self.artifact(key).and_then(Value::as_str)
    }

    pub fn is_completed(&self) -> bool {
        self.status == Status::Completed
    }

    /// Next timestamp, never earlier than (and always after) the previous one.
    pub(crate) fn stamp(&mut self, requested: u64) -> u64 {
        let t = requested.max(self.last_ms + 1);
        self.last_ms = t;
        t
    }

    /// Turns of the task at `task_index`.
    pub fn task_turns<'a>(&'a self, task: &'a str) -> impl Iterator<Item = &'a InteractionTurn> + 'a {
        self.history.iter().filter(move |t| t.task == task)
    }

    /// Most recent turn that produced a tool result.
    pub fn latest_tool_output(&self) -> Option<&InteractionTurn> {
        self.history.iter().rev().find(|t| t.tool_output.is_some())
    }
}

pub fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}
