//! The autopilot agent: answers workflow prompts through the provider on the
//! user's behalf and hands control back when it must not or cannot answer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{
    build_autopilot_prompt, complete_structured, parse_structured, with_choice_correction, GatewayError, ProviderConfig,
    SharedProvider,
};
use crate::safety::SafetyConfig;
use crate::workflow::{
    display_value, match_option, Engine, EngineError, RenderedPrompt, SafetyTag, Session, Status, TurnInput, TurnKind,
};

pub const AGENT_KEYS: [&str; 2] = ["Thoughts", "Answer"];
/// Submitted for steps that take no input (the bound tool just runs).
pub const CONTINUE: &str = "continue";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandoffReason {
    RequestsSequence,
    DontKnow,
    InvalidAfterRetry,
    /// The germline warning is waiting for the user; the agent may not confirm it.
    AcknowledgmentRequired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionKind {
    Answer { text: String },
    Handoff { reason: HandoffReason },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentDecision {
    pub state_id: String,
    #[serde(flatten)]
    pub kind: DecisionKind,
    pub thoughts: String,
}

impl AgentDecision {
    fn handoff(state_id: &str, reason: HandoffReason, thoughts: impl Into<String>) -> Self {
        Self {
            state_id: state_id.to_string(),
            kind: DecisionKind::Handoff { reason },
            thoughts: thoughts.into(),
        }
    }

    fn answer(state_id: &str, text: impl Into<String>, thoughts: impl Into<String>) -> Self {
        Self {
            state_id: state_id.to_string(),
            kind: DecisionKind::Answer { text: text.into() },
            thoughts: thoughts.into(),
        }
    }

    pub fn handoff_reason(&self) -> Option<HandoffReason> {
        match self.kind {
            DecisionKind::Handoff { reason } => Some(reason),
            DecisionKind::Answer { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Handoff,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub decision: AgentDecision,
    /// The user's replacement when the override hook intervened.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overridden_with: Option<String>,
    /// History index of the turn this step produced, if one was submitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutopilotTranscript {
    pub entries: Vec<TranscriptEntry>,
    pub termination: Termination,
}

impl AutopilotTranscript {
    pub fn handoff(&self) -> Option<HandoffReason> {
        match self.termination {
            Termination::Handoff => self.entries.last().and_then(|e| e.decision.handoff_reason()),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutopilotError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("step limit must be at least 1")]
    InvalidStepLimit,
}

/// Called before each decision is applied. Returning `Some(response)`
/// replaces the agent's decision with a user answer.
pub type OverrideHook<'a> = dyn FnMut(&RenderedPrompt, &AgentDecision) -> Option<String> + 'a;

fn is_dont_know(answer: &str) -> bool {
    let a = answer.to_lowercase().replace('\u{2019}', "'");
    a.contains("don't know") || a.contains("do not know") || a.contains("dont know")
}

/// The inquiry shown to the agent: the current instruction, options, the
/// session request, this task's earlier answers and the latest tool output.
/// Nucleotide runs are redacted before anything leaves the process.
pub fn system_message(engine: &Engine, s: &Session, prompt: &RenderedPrompt) -> String {
    let mut lines = vec![format!("[state: {}]", prompt.state_id)];
    if let Some(def) = engine.registry().machine(&prompt.task) {
        lines.push(format!("Task: {} ({})", def.task_name, def.description));
    }
    lines.push(format!("Instruction: {}", prompt.instruction));
    if !prompt.input.options.is_empty() {
        let opts: Vec<String> = prompt
            .input
            .options
            .iter()
            .enumerate()
            .map(|(i, o)| format!("{}. {o}", i + 1))
            .collect();
        lines.push(format!("Options: {}", opts.join(" | ")));
    }
    if let Some(d) = &prompt.default {
        lines.push(format!("Default answer: {d}"));
    }
    lines.push(format!("Session request: {}", s.header.request));
    let earlier: Vec<String> = s
        .task_turns(&prompt.task)
        .filter(|t| t.kind == TurnKind::Answer)
        .map(|t| format!("- {}: {}", t.state_id, t.response))
        .collect();
    if !earlier.is_empty() {
        lines.push("Earlier answers in this task:".into());
        lines.extend(earlier);
    }
    if let Some(t) = s.latest_tool_output() {
        if let Some(out) = &t.tool_output {
            lines.push(format!("Latest tool output ({}): {}", t.state_id, display_value(out)));
        }
    }
    engine.safety().redact(&lines.join("\n"))
}

/// Decides the answer for the session's current prompt without applying it.
pub fn agent_step(
    engine: &Engine,
    s: &Session,
    meta_prompt: &str,
    provider: &SharedProvider,
    config: &ProviderConfig,
) -> Result<AgentDecision, AutopilotError> {
    let prompt = engine.current_prompt(s)?;
    agent_step_for(engine, s, &prompt, meta_prompt, provider, config, engine.safety())
}

fn agent_step_for(
    engine: &Engine,
    s: &Session,
    prompt: &RenderedPrompt,
    meta_prompt: &str,
    provider: &SharedProvider,
    config: &ProviderConfig,
    safety: &SafetyConfig,
) -> Result<AgentDecision, AutopilotError> {
    let id = prompt.state_id.as_str();
    if s.status == Status::AwaitingAck {
        return Ok(AgentDecision::handoff(
            id,
            HandoffReason::AcknowledgmentRequired,
            "The germline warning must be confirmed by the user.",
        ));
    }
    if prompt.tags.contains(&SafetyTag::RequestsSequence) {
        return Ok(AgentDecision::handoff(
            id,
            HandoffReason::RequestsSequence,
            "This step asks for a sequence, which only the user may supply.",
        ));
    }
    if prompt.input.kind == "none" {
        return Ok(AgentDecision::answer(id, CONTINUE, "This step runs a tool and takes no input."));
    }

    let bundle = build_autopilot_prompt(meta_prompt, &system_message(engine, s, prompt), safety)?;
    let fields = match complete_structured(&bundle, provider, config, &AGENT_KEYS) {
        Ok(f) => f,
        Err(GatewayError::Unparsable(e)) => {
            return Ok(AgentDecision::handoff(id, HandoffReason::InvalidAfterRetry, e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    let text = |k: &str| fields.get(k).and_then(|v| v.as_text()).unwrap_or_default().to_string();
    let (answer, thoughts) = (text("Answer"), text("Thoughts"));
    if is_dont_know(&answer) {
        return Ok(AgentDecision::handoff(id, HandoffReason::DontKnow, thoughts));
    }
    let options = &prompt.input.options;
    if options.is_empty() {
        return Ok(AgentDecision::answer(id, answer.trim(), thoughts));
    }
    if let Some(label) = match_option(&answer, options) {
        return Ok(AgentDecision::answer(id, label, thoughts));
    }

    // One corrective reprompt listing the options.
    let retry = with_choice_correction(&bundle, &answer, options);
    let raw = crate::llm::complete(&retry, provider, config)?;
    let Ok(fields) = parse_structured(&raw, &AGENT_KEYS) else {
        return Ok(AgentDecision::handoff(id, HandoffReason::InvalidAfterRetry, thoughts));
    };
    let second = fields.get("Answer").and_then(|v| v.as_text()).unwrap_or_default();
    let thoughts = fields.get("Thoughts").and_then(|v| v.as_text()).unwrap_or_default().to_string();
    if is_dont_know(second) {
        return Ok(AgentDecision::handoff(id, HandoffReason::DontKnow, thoughts));
    }
    Ok(match match_option(second, options) {
        Some(label) => AgentDecision::answer(id, label, thoughts),
        None => AgentDecision::handoff(id, HandoffReason::InvalidAfterRetry, thoughts),
    })
}

/// Repeats decide-then-submit until the session completes, the agent hands
/// off, or `step_limit` turns have been applied. Decisions go through the
/// same engine validation as user answers.
pub fn run_autopilot(
    engine: &Engine,
    s: &mut Session,
    meta_prompt: &str,
    provider: &SharedProvider,
    config: &ProviderConfig,
    step_limit: usize,
    mut hook: Option<&mut OverrideHook<'_>>,
) -> Result<AutopilotTranscript, AutopilotError> {
    if step_limit == 0 {
        return Err(AutopilotError::InvalidStepLimit);
    }
    let mut entries = Vec::new();
    let mut applied = 0;
    let termination = loop {
        if s.is_completed() {
            break Termination::Completed;
        }
        if applied >= step_limit {
            break Termination::StepLimit;
        }
        let prompt = engine.current_prompt(s)?;
        let decision = agent_step_for(engine, s, &prompt, meta_prompt, provider, config, engine.safety())?;
        let replacement = hook.as_mut().and_then(|h| h(&prompt, &decision));

        let input = match (&replacement, &decision.kind) {
            (Some(user), _) => TurnInput::user(user.clone()),
            (None, DecisionKind::Answer { text }) => TurnInput::autopilot(text.clone(), decision.thoughts.clone()),
            (None, DecisionKind::Handoff { .. }) => {
                entries.push(TranscriptEntry {
                    decision,
                    overridden_with: None,
                    turn: None,
                });
                break Termination::Handoff;
            }
        };
        let turn = s.history.len();
        let result = engine.submit(s, input);
        entries.push(TranscriptEntry {
            decision,
            overridden_with: replacement,
            turn: (s.history.len() > turn).then_some(turn),
        });
        result?;
        applied += 1;
    };
    Ok(AutopilotTranscript { entries, termination })
}
