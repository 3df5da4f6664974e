//! Declarative task state machines chained into design sessions.

mod autofill;
mod def;
mod engine;
mod hub;
mod registry;
mod report;
mod session;

pub use autofill::extract_fields;
pub use def::{InputKind, SafetyTag, StateDef, ToolBinding, Validator, WorkflowDef, END, NEXT};
pub use engine::{
    display_value, is_affirmative, match_option, Engine, GateWarning, InputSchema, RenderedPrompt, TurnInput,
    TurnOutcome,
};
pub use hub::SessionHub;
pub use registry::{
    gate_violations, is_guide_design, Catalog, CatalogGroup, GateViolation, WorkflowRegistry, CATALOG_FILE,
    REQUEST_FIELDS,
};
pub use report::{build_report, Acknowledgment, Decision, DesignReport, TurnSummary};
pub use session::{
    now_ms, Artifact, ArtifactSource, InteractionTurn, Mode, PendingGate, Position, Responder, Session, SessionHeader,
    Status, TurnError, TurnKind,
};

use crate::planner::PlannerError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorkflowError {
    #[error("{document}: {message}")]
    Parse { document: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("state `{state}` transitions to unknown state `{target}`")]
    DanglingTransition { state: String, target: String },
    #[error("duplicate state id `{0}`")]
    DuplicateStateId(String),
    #[error("duplicate task `{0}`")]
    DuplicateTask(String),
    #[error("state `{state}` binds unknown tool `{tool}`")]
    UnknownToolBinding { state: String, tool: String },
    #[error("state `{state}`: {message}")]
    InvalidState { state: String, message: String },
    #[error("state `{state}` uses `{name}`, which no earlier state or request field provides")]
    UnknownPlaceholder { state: String, name: String },
    #[error("guide design state `{state}` in `{task}` is reachable without an organism checkpoint")]
    GateBypass { task: String, state: String },
    #[error("catalog names unknown task `{0}`")]
    UnknownTask(String),
    #[error("catalog: {0}")]
    Catalog(String),
    #[error("task table: {0}")]
    Table(PlannerError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("plan is empty")]
    EmptyPlan,
    #[error("{0}")]
    ModeMismatch(String),
    #[error("session has no workflow (Q&A mode)")]
    NoWorkflow,
    #[error("session is already completed")]
    SessionCompleted,
    #[error("session is not completed")]
    SessionIncomplete,
    #[error("session is {0:?}")]
    WrongStatus(Status),
    #[error("no session `{0}`")]
    NoSuchSession(String),
    #[error("state `{state}` needs `{name}`, which is not available")]
    MissingPlaceholder { state: String, name: String },
    #[error("`{response}` is not one of: {}", options.join(", "))]
    InvalidChoice { response: String, options: Vec<String> },
    #[error("{0}")]
    InputRejected(String),
    #[error("tool `{tool}` failed: {message}")]
    ToolFailure { tool: String, message: String },
    #[error("guide design at `{state}` requires an acknowledged organism checkpoint")]
    GateRequired { state: String },
    #[error("the germline warning must be acknowledged before continuing")]
    AckRequired,
    #[error("no warning is awaiting acknowledgment")]
    NotAwaitingAck,
    #[error("only a user can acknowledge the germline warning")]
    AckRequiresUser,
    #[error("replay diverged at turn {0}")]
    ReplayDivergence(usize),
}

impl EngineError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::UnknownTask(_) => "unknown_task",
            EngineError::EmptyPlan => "empty_plan",
            EngineError::ModeMismatch(_) => "mode_mismatch",
            EngineError::NoWorkflow => "no_workflow",
            EngineError::SessionCompleted => "session_completed",
            EngineError::SessionIncomplete => "session_incomplete",
            EngineError::WrongStatus(_) => "wrong_status",
            EngineError::NoSuchSession(_) => "session_not_found",
            EngineError::MissingPlaceholder { .. } => "missing_placeholder",
            EngineError::InvalidChoice { .. } => "invalid_choice",
            EngineError::InputRejected(_) => "input_rejected",
            EngineError::ToolFailure { .. } => "tool_failure",
            EngineError::GateRequired { .. } => "gate_required",
            EngineError::AckRequired => "ack_required",
            EngineError::NotAwaitingAck => "not_awaiting_ack",
            EngineError::AckRequiresUser => "ack_requires_user",
            EngineError::ReplayDivergence(_) => "replay_divergence",
        }
    }
}
