use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::autofill::extract_fields;
use super::def::{InputKind, SafetyTag, StateDef, Validator, WorkflowDef, END};
use super::registry::{is_guide_design, WorkflowRegistry};
use super::report::{build_report, DesignReport};
use super::session::{
    now_ms, Artifact, ArtifactSource, InteractionTurn, Mode, PendingGate, Position, Responder, Session, SessionHeader,
    Status, TurnError, TurnKind,
};
use super::EngineError;
use crate::genomics::DnaSeq;
use crate::safety::{organism_gate, scan_nucleotide_runs, GateDecision, GateRecord, OrganismTable, SafetyConfig};
use crate::template::{self, TemplateError};
use crate::tools::ToolProvider;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSchema {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateWarning {
    pub warning: String,
    pub moratorium_reference: String,
    pub requires_ack: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub task: String,
    pub state_id: String,
    pub instruction: String,
    pub input: InputSchema,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<GateWarning>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<SafetyTag>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnOutcome {
    pub turn: InteractionTurn,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<RenderedPrompt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<DesignReport>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnInput {
    pub response: String,
    pub responder: Responder,
    pub reasoning: Option<String>,
    /// Recorded time to reuse (replay); the wall clock otherwise.
    pub timestamp_ms: Option<u64>,
}

impl TurnInput {
    pub fn user(response: impl Into<String>) -> Self {
        Self {
            response: response.into(),
            responder: Responder::User,
            reasoning: None,
            timestamp_ms: None,
        }
    }

    pub fn autopilot(response: impl Into<String>, reasoning: impl Into<String>) -> Self {
        Self {
            response: response.into(),
            responder: Responder::Autopilot,
            reasoning: Some(reasoning.into()),
            timestamp_ms: None,
        }
    }

    pub fn at(mut self, timestamp_ms: u64) -> Self {
        self.timestamp_ms = Some(timestamp_ms);
        self
    }
}

/// Matches a response against choice labels: case-insensitive exact label
/// or 1-based index.
pub fn match_option<'a>(response: &str, options: &'a [String]) -> Option<&'a str> {
    let r = response.trim();
    if let Some(o) = options.iter().find(|o| o.eq_ignore_ascii_case(r)) {
        return Some(o);
    }
    r.parse::<usize>()
        .ok()
        .filter(|&i| i >= 1)
        .and_then(|i| options.get(i - 1))
        .map(String::as_str)
}

/// Whether `text` reads as consent to the germline warning.
pub fn is_affirmative(text: &str) -> bool {
    let t = text
        .trim()
        .trim_end_matches(['.', '!'])
        .to_lowercase();
    const WORDS: [&str; 10] = [
        "yes", "y", "ok", "okay", "agree", "confirm", "confirmed", "acknowledge", "acknowledged", "understood",
    ];
    const PREFIXES: [&str; 5] = ["yes", "i understand", "i acknowledge", "i agree", "i confirm"];
    WORDS.contains(&t.as_str()) || PREFIXES.iter().any(|p| t.starts_with(p))
}

/// Text form of an artifact value for instructions and prompts.
pub fn display_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, item)| match (item.get("spacer"), item.get("pam"), item.get("rank")) {
                (Some(s), Some(p), Some(r)) => format!(
                    "{}. {} (PAM {}, rank {})",
                    i + 1,
                    display_value(s),
                    display_value(p),
                    r
                ),
                _ => format!("{}. {}", i + 1, display_value(item)),
            })
            .collect::<Vec<_>>()
            .join("\n"),
        Value::Object(m) => match m.get("title") {
            Some(t) => display_value(t),
            None => v.to_string(),
        },
        other => other.to_string(),
    }
}

pub struct Engine {
    registry: Arc<WorkflowRegistry>,
    tools: Arc<ToolProvider>,
    safety: SafetyConfig,
    organisms: Arc<OrganismTable>,
    vocabulary: BTreeSet<String>,
}

enum Accepted {
    Choice(String),
    Text(String),
}

impl Accepted {
    fn text(&self) -> &str {
        match self {
            Accepted::Choice(s) | Accepted::Text(s) => s,
        }
    }
}

impl Engine {
    pub fn new(
        registry: Arc<WorkflowRegistry>,
        tools: Arc<ToolProvider>,
        safety: SafetyConfig,
        organisms: Arc<OrganismTable>,
    ) -> Self {
        let vocabulary = tools.library.gene_symbols().into_iter().map(str::to_string).collect();
        Self {
            registry,
            tools,
            safety,
            organisms,
            vocabulary,
        }
    }

    pub fn registry(&self) -> &WorkflowRegistry {
        &self.registry
    }

    pub fn tools(&self) -> &ToolProvider {
        &self.tools
    }

    pub fn safety(&self) -> &SafetyConfig {
        &self.safety
    }

    pub fn organisms(&self) -> &OrganismTable {
        &self.organisms
    }

    pub fn start_session(&self, mode: Mode, plan: &[String], request: &str) -> Result<Session, EngineError> {
        let header = SessionHeader {
            session_id: uuid::Uuid::new_v4().to_string(),
            mode,
            plan: plan.to_vec(),
            request: self.safety.redact(request),
            created_ms: now_ms(),
        };
        self.start_from_header(header)
    }

    /// Recreates a session's initial state from its header.
    pub fn start_from_header(&self, header: SessionHeader) -> Result<Session, EngineError> {
        if header.mode == Mode::Qa {
            if !header.plan.is_empty() {
                return Err(EngineError::ModeMismatch("Q&A sessions do not run workflows".into()));
            }
            let mut s = Session::new(header, None, Status::AwaitingInput);
            self.autofill(&mut s);
            return Ok(s);
        }
        let first = header.plan.first().ok_or(EngineError::EmptyPlan)?;
        for t in &header.plan {
            if self.registry.machine(t).is_none() {
                return Err(EngineError::UnknownTask(t.clone()));
            }
        }
        let start = self.registry.machine(first).expect("checked above").start_state().to_string();
        let mut s = Session::new(
            header,
            Some(Position {
                task_index: 0,
                state_id: start,
            }),
            Status::AwaitingInput,
        );
        self.autofill(&mut s);
        Ok(s)
    }

    fn autofill(&self, s: &mut Session) {
        let fields = extract_fields(&s.header.request, &self.organisms, &self.vocabulary);
        s.artifacts.insert(
            "request".into(),
            Artifact {
                value: Value::String(s.header.request.clone()),
                source: ArtifactSource::Autofill,
                turn: None,
            },
        );
        for (k, v) in fields {
            s.artifacts.insert(
                k.to_string(),
                Artifact {
                    value: Value::String(v),
                    source: ArtifactSource::Autofill,
                    turn: None,
                },
            );
        }
    }

    fn locate<'r>(&'r self, s: &Session) -> Result<(&'r WorkflowDef, &'r StateDef), EngineError> {
        let pos = s.position.as_ref().ok_or(if s.mode() == Mode::Qa {
            EngineError::NoWorkflow
        } else {
            EngineError::SessionCompleted
        })?;
        let task = &s.header.plan[pos.task_index];
        let def = self
            .registry
            .machine(task)
            .ok_or_else(|| EngineError::UnknownTask(task.clone()))?;
        let state = def
            .state(&pos.state_id)
            .ok_or_else(|| EngineError::UnknownTask(pos.state_id.clone()))?;
        Ok((def, state))
    }

    fn render(&self, s: &Session, state: &StateDef) -> Result<String, EngineError> {
        template::render(&state.instruction, |name| s.artifact(name).map(display_value)).map_err(|e| match e {
            TemplateError::Missing(name) => EngineError::MissingPlaceholder {
                state: state.id.clone(),
                name,
            },
            other => EngineError::MissingPlaceholder {
                state: state.id.clone(),
                name: other.to_string(),
            },
        })
    }

    pub fn current_prompt(&self, s: &Session) -> Result<RenderedPrompt, EngineError> {
        match s.status {
            Status::Completed => return Err(EngineError::SessionCompleted),
            Status::Failed => return Err(EngineError::WrongStatus(s.status)),
            _ => {}
        }
        let (def, state) = self.locate(s)?;
        let instruction = self.render(s, state)?;
        let mut warnings = Vec::new();
        let input = if let (Status::AwaitingAck, Some(p)) = (s.status, &s.pending_gate) {
            warnings.push(GateWarning {
                warning: p.warning.clone(),
                moratorium_reference: p.moratorium_reference.clone(),
                requires_ack: true,
            });
            InputSchema {
                kind: InputKind::Acknowledgment.name().into(),
                options: vec![],
            }
        } else {
            if state.has_tag(SafetyTag::OrganismCheckpoint) {
                let prefilled = s.artifact_text("species").unwrap_or("");
                if let GateDecision::RequireAck {
                    warning,
                    moratorium_reference,
                } = organism_gate(prefilled, &self.organisms, &self.safety.gate)
                {
                    warnings.push(GateWarning {
                        warning,
                        moratorium_reference,
                        requires_ack: true,
                    });
                }
            }
            InputSchema {
                kind: state.input.name().into(),
                options: state.input.options().to_vec(),
            }
        };
        Ok(RenderedPrompt {
            task: def.task_name.clone(),
            state_id: state.id.clone(),
            instruction,
            input,
            default: state
                .default_from
                .as_ref()
                .and_then(|k| s.artifact(k))
                .map(display_value),
            warnings,
            tags: state.tags.clone(),
            status: s.status,
        })
    }

    pub fn submit(&self, s: &mut Session, input: TurnInput) -> Result<TurnOutcome, EngineError> {
        match s.status {
            Status::Completed => return Err(EngineError::SessionCompleted),
            Status::AwaitingAck => {
                if input.responder == Responder::User && is_affirmative(&input.response) {
                    return self.acknowledge(s, input);
                }
                let (_, state) = self.locate(s)?;
                let rendered = self.render(s, state).unwrap_or_else(|_| state.instruction.clone());
                let err = EngineError::AckRequired;
                self.reject(s, state, rendered, &input, &err);
                return Err(err);
            }
            Status::AwaitingInput => {}
            other => return Err(EngineError::WrongStatus(other)),
        }
        let (def, state) = self.locate(s)?;
        let rendered = match self.render(s, state) {
            Ok(r) => r,
            Err(e) => {
                self.reject(s, state, state.instruction.clone(), &input, &e);
                return Err(e);
            }
        };
        let accepted = match self.accept(s, state, &input.response) {
            Ok(a) => a,
            Err(e) => {
                self.reject(s, state, rendered, &input, &e);
                return Err(e);
            }
        };

        let mut writes: Vec<(String, Value, ArtifactSource)> = Vec::new();
        if let Some(key) = &state.record {
            let value = match &accepted {
                Accepted::Choice(label) => state.stored_value(label),
                Accepted::Text(t) if state.has_tag(SafetyTag::OrganismCheckpoint) => self
                    .organisms
                    .canonical(t)
                    .map(str::to_string)
                    .unwrap_or_else(|| t.trim().to_lowercase()),
                Accepted::Text(t) => t.clone(),
            };
            writes.push((key.clone(), Value::String(value), ArtifactSource::Answer));
        }

        if state.has_tag(SafetyTag::OrganismCheckpoint) {
            let decision = organism_gate(accepted.text(), &self.organisms, &self.safety.gate);
            if let GateDecision::RequireAck {
                warning,
                moratorium_reference,
            } = decision
            {
                let ts = s.stamp(input.timestamp_ms.unwrap_or_else(now_ms));
                let index = s.history.len();
                let overrides = self.commit(s, writes, index);
                s.gates.push(GateRecord {
                    state_id: state.id.clone(),
                    organism_answer: accepted.text().to_string(),
                    triggered: true,
                    acknowledgment: None,
                    moratorium_reference: None,
                    timestamp_ms: ts,
                });
                s.pending_gate = Some(PendingGate {
                    state_id: state.id.clone(),
                    answer: accepted.text().to_string(),
                    warning,
                    moratorium_reference,
                });
                s.status = Status::AwaitingAck;
                let turn = InteractionTurn {
                    index,
                    task: def.task_name.clone(),
                    state_id: state.id.clone(),
                    rendered_instruction: rendered,
                    responder: input.responder,
                    response: input.response,
                    kind: TurnKind::PendingAck,
                    tool_output: None,
                    outcome_label: None,
                    next_state: None,
                    error: None,
                    reasoning: input.reasoning,
                    overrides,
                    timestamp_ms: ts,
                };
                s.history.push(turn.clone());
                return Ok(TurnOutcome {
                    turn,
                    status: s.status,
                    prompt: self.current_prompt(s).ok(),
                    report: None,
                });
            }
            let ts = s.stamp(input.timestamp_ms.unwrap_or_else(now_ms));
            s.gates.push(GateRecord {
                state_id: state.id.clone(),
                organism_answer: accepted.text().to_string(),
                triggered: false,
                acknowledgment: None,
                moratorium_reference: None,
                timestamp_ms: ts,
            });
            // The stamp above is reused for the turn below.
            return self.finish(s, def, state, rendered, input, &accepted, writes, Some(ts));
        }

        self.finish(s, def, state, rendered, input, &accepted, writes, None)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        s: &mut Session,
        def: &WorkflowDef,
        state: &StateDef,
        rendered: String,
        input: TurnInput,
        accepted: &Accepted,
        mut writes: Vec<(String, Value, ArtifactSource)>,
        stamped: Option<u64>,
    ) -> Result<TurnOutcome, EngineError> {
        let mut tool_output = None;
        if let Some(binding) = &state.tool {
            if is_guide_design(state) && !self.gate_satisfied(s, &writes) {
                let err = EngineError::GateRequired {
                    state: state.id.clone(),
                };
                self.reject(s, state, rendered, &input, &err);
                return Err(err);
            }
            let args = self.resolve_args(s, &writes, &binding.args);
            let previous = s.status;
            s.status = Status::RunningTool;
            let result = self.tools.run(&binding.name, &args);
            s.status = previous;
            match result {
                Ok(v) => {
                    writes.push((binding.output.clone(), v.clone(), ArtifactSource::Tool));
                    tool_output = Some(v);
                }
                Err(e) => {
                    let err = EngineError::ToolFailure {
                        tool: binding.name.clone(),
                        message: e.to_string(),
                    };
                    self.reject(s, state, rendered, &input, &err);
                    return Err(err);
                }
            }
        }

        let label = state
            .outcome_for(match accepted {
                Accepted::Choice(l) => Some(l.as_str()),
                Accepted::Text(_) => None,
            })
            .to_string();
        let target = state.transitions[&label].clone();
        let ts = match stamped {
            Some(t) => t,
            None => s.stamp(input.timestamp_ms.unwrap_or_else(now_ms)),
        };
        let index = s.history.len();
        let overrides = self.commit(s, writes, index);
        let next_state = self.advance(s, &target);
        let turn = InteractionTurn {
            index,
            task: def.task_name.clone(),
            state_id: state.id.clone(),
            rendered_instruction: rendered,
            responder: input.responder,
            response: input.response,
            kind: TurnKind::Answer,
            tool_output,
            outcome_label: Some(label),
            next_state: Some(next_state),
            error: None,
            reasoning: input.reasoning,
            overrides,
            timestamp_ms: ts,
        };
        s.history.push(turn.clone());
        Ok(self.outcome(s, turn))
    }

    fn outcome(&self, s: &Session, turn: InteractionTurn) -> TurnOutcome {
        if s.is_completed() {
            TurnOutcome {
                turn,
                status: s.status,
                prompt: None,
                report: build_report(s, &self.registry).ok(),
            }
        } else {
            TurnOutcome {
                turn,
                status: s.status,
                prompt: self.current_prompt(s).ok(),
                report: None,
            }
        }
    }

    /// Confirms the pending germline warning. Only a user can acknowledge.
    pub fn acknowledge(&self, s: &mut Session, input: TurnInput) -> Result<TurnOutcome, EngineError> {
        if s.status != Status::AwaitingAck {
            return Err(EngineError::NotAwaitingAck);
        }
        let (def, state) = self.locate(s)?;
        let rendered = self.render(s, state).unwrap_or_else(|_| state.instruction.clone());
        if input.responder != Responder::User {
            let err = EngineError::AckRequiresUser;
            self.reject(s, state, rendered, &input, &err);
            return Err(err);
        }
        let pending = s.pending_gate.take().ok_or(EngineError::NotAwaitingAck)?;
        let text = match input.response.trim() {
            "" => "acknowledged".to_string(),
            t => t.to_string(),
        };
        if let Some(g) = s
            .gates
            .iter_mut()
            .rev()
            .find(|g| g.state_id == pending.state_id && g.triggered && g.acknowledgment.is_none())
        {
            g.acknowledgment = Some(text);
            g.moratorium_reference = Some(pending.moratorium_reference.clone());
        }
        s.status = Status::AwaitingInput;
        let label = state.outcome_for(None).to_string();
        let target = state.transitions[&label].clone();
        let ts = s.stamp(input.timestamp_ms.unwrap_or_else(now_ms));
        let index = s.history.len();
        let next_state = self.advance(s, &target);
        let turn = InteractionTurn {
            index,
            task: def.task_name.clone(),
            state_id: state.id.clone(),
            rendered_instruction: rendered,
            responder: input.responder,
            response: input.response,
            kind: TurnKind::Acknowledgment,
            tool_output: None,
            outcome_label: Some(label),
            next_state: Some(next_state),
            error: None,
            reasoning: input.reasoning,
            overrides: vec![],
            timestamp_ms: ts,
        };
        s.history.push(turn.clone());
        Ok(self.outcome(s, turn))
    }

    fn accept(&self, s: &Session, state: &StateDef, response: &str) -> Result<Accepted, EngineError> {
        match &state.input {
            InputKind::Choice { options } => match_option(response, options)
                .map(|l| Accepted::Choice(l.to_string()))
                .ok_or_else(|| EngineError::InvalidChoice {
                    response: response.to_string(),
                    options: options.clone(),
                }),
            InputKind::FreeText => {
                let trimmed = response.trim();
                if !state.has_tag(SafetyTag::RequestsSequence)
                    && !scan_nucleotide_runs(trimmed, self.safety.threshold).is_empty()
                {
                    return Err(EngineError::InputRejected(
                        "this step does not take sequences; remove the nucleotide run".into(),
                    ));
                }
                let text = if trimmed.is_empty() {
                    state
                        .default_from
                        .as_ref()
                        .and_then(|k| s.artifact(k))
                        .map(display_value)
                        .filter(|d| !d.is_empty())
                        .ok_or_else(|| EngineError::InputRejected("a response is required".into()))?
                } else {
                    trimmed.to_string()
                };
                validate(&state.validator, &text).map(Accepted::Text)
            }
            InputKind::Acknowledgment | InputKind::None => Ok(Accepted::Text(response.trim().to_string())),
        }
    }

    fn gate_satisfied(&self, s: &Session, pending: &[(String, Value, ArtifactSource)]) -> bool {
        let species = pending
            .iter()
            .rev()
            .find(|(k, _, _)| k == "species")
            .map(|(_, v, _)| v)
            .or_else(|| s.artifact("species"))
            .and_then(Value::as_str)
            .unwrap_or("");
        !self.organisms.is_human(species) || s.gates.iter().any(|g| g.triggered && g.acknowledgment.is_some())
    }

    fn resolve_args(
        &self,
        s: &Session,
        pending: &[(String, Value, ArtifactSource)],
        args: &BTreeMap<String, Value>,
    ) -> BTreeMap<String, Value> {
        let lookup = |key: &str| {
            pending
                .iter()
                .rev()
                .find(|(k, _, _)| k == key)
                .map(|(_, v, _)| v.clone())
                .or_else(|| s.artifact(key).cloned())
                .unwrap_or(Value::Null)
        };
        args.iter()
            .map(|(name, v)| {
                let resolved = match v.as_str().and_then(|t| t.strip_prefix('@')) {
                    Some(key) => lookup(key.trim_end_matches('?')),
                    None => v.clone(),
                };
                (name.clone(), resolved)
            })
            .collect()
    }

    /// Applies writes and returns the keys whose earlier value was replaced.
    fn commit(&self, s: &mut Session, writes: Vec<(String, Value, ArtifactSource)>, turn: usize) -> Vec<String> {
        let mut overrides = Vec::new();
        for (key, value, source) in writes {
            if let Some(prev) = s.artifacts.get(&key) {
                if prev.value != value {
                    overrides.push(key.clone());
                }
            }
            s.artifacts.insert(
                key,
                Artifact {
                    value,
                    source,
                    turn: Some(turn),
                },
            );
        }
        overrides
    }

    /// Moves to `target` (a state id or END) and returns the resulting state
    /// id, or END when the whole plan is finished.
    fn advance(&self, s: &mut Session, target: &str) -> String {
        let pos = s.position.as_mut().expect("advance on a positioned session");
        if target != END {
            pos.state_id = target.to_string();
            return target.to_string();
        }
        let next_index = pos.task_index + 1;
        match s.header.plan.get(next_index).and_then(|t| self.registry.machine(t)) {
            Some(def) => {
                let start = def.start_state().to_string();
                *pos = Position {
                    task_index: next_index,
                    state_id: start.clone(),
                };
                start
            }
            None => {
                s.position = None;
                s.status = Status::Completed;
                END.to_string()
            }
        }
    }

    fn reject(&self, s: &mut Session, state: &StateDef, rendered: String, input: &TurnInput, err: &EngineError) {
        let ts = s.stamp(input.timestamp_ms.unwrap_or_else(now_ms));
        let task = s.current_task().unwrap_or_default().to_string();
        let index = s.history.len();
        s.history.push(InteractionTurn {
            index,
            task,
            state_id: state.id.clone(),
            rendered_instruction: rendered,
            responder: input.responder,
            // Rejected input is kept only in redacted form.
            response: self.safety.redact(&input.response),
            kind: TurnKind::Rejected,
            tool_output: None,
            outcome_label: None,
            next_state: None,
            error: Some(TurnError {
                code: err.code().to_string(),
                message: self.safety.redact(&err.to_string()),
            }),
            reasoning: input.reasoning.clone(),
            overrides: vec![],
            timestamp_ms: ts,
        });
    }

    pub fn export_report(&self, s: &Session) -> Result<DesignReport, EngineError> {
        build_report(s, &self.registry)
    }

    /// Re-executes recorded turns on a fresh session built from `header`.
    /// Each regenerated turn must equal its recording.
    pub fn replay(&self, header: SessionHeader, turns: &[InteractionTurn]) -> Result<Session, EngineError> {
        let mut s = self.start_from_header(header)?;
        for recorded in turns {
            self.apply_recorded(&mut s, recorded)?;
        }
        Ok(s)
    }

    pub fn apply_recorded(&self, s: &mut Session, recorded: &InteractionTurn) -> Result<(), EngineError> {
        // A rejection changes nothing but the history, and its response was
        // stored redacted, so it is re-appended rather than re-run.
        if recorded.kind == TurnKind::Rejected {
            if recorded.index != s.history.len() {
                return Err(EngineError::ReplayDivergence(recorded.index));
            }
            s.stamp(recorded.timestamp_ms);
            s.history.push(recorded.clone());
            return Ok(());
        }
        let input = TurnInput {
            response: recorded.response.clone(),
            responder: recorded.responder,
            reasoning: recorded.reasoning.clone(),
            timestamp_ms: Some(recorded.timestamp_ms),
        };
        let _ = if recorded.kind == TurnKind::Acknowledgment {
            self.acknowledge(s, input)
        } else {
            self.submit(s, input)
        };
        match s.history.last() {
            Some(t) if t == recorded => Ok(()),
            _ => Err(EngineError::ReplayDivergence(recorded.index)),
        }
    }
}

fn validate(v: &Validator, text: &str) -> Result<String, EngineError> {
    match v {
        Validator::Any => Ok(text.to_string()),
        Validator::GeneSymbol => {
            let ok = (1..=20).contains(&text.len())
                && text.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && text.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '.');
            if ok {
                Ok(text.to_string())
            } else {
                Err(EngineError::InputRejected(format!("`{text}` is not a gene symbol")))
            }
        }
        Validator::NucleotideSequence { min_len, max_len } => {
            let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
            let seq = DnaSeq::new(&cleaned).map_err(|e| EngineError::InputRejected(e.to_string()))?;
            if seq.len() < *min_len || seq.len() > *max_len {
                return Err(EngineError::InputRejected(format!(
                    "sequence length {} is outside {min_len}..={max_len}",
                    seq.len()
                )));
            }
            Ok(seq.as_str().to_string())
        }
    }
}
