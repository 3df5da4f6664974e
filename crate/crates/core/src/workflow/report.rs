use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

use super::engine::display_value;
use super::registry::WorkflowRegistry;
use super::session::{ArtifactSource, Mode, Responder, Session, Status, TurnKind};
use super::EngineError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub task: String,
    pub state_id: String,
    pub key: String,
    pub value: String,
    pub responder: Responder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Acknowledgment {
    pub state_id: String,
    pub organism_answer: String,
    pub acknowledgment: String,
    pub moratorium_reference: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnSummary {
    pub index: usize,
    pub state_id: String,
    pub responder: Responder,
    pub response: String,
    pub kind: TurnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome_label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<String>,
}

/// Summary of a completed session. Session ids and timestamps are left out
/// so identical histories give identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub mode: Mode,
    pub request: String,
    pub tasks: Vec<String>,
    pub decisions: Vec<Decision>,
    pub guides: Value,
    pub off_target: Value,
    pub primers: Value,
    pub protocol: Value,
    pub acknowledgments: Vec<Acknowledgment>,
    /// Every artifact declared by the executed machines (null when unset)
    /// plus any autofilled fields.
    pub artifacts: BTreeMap<String, Value>,
    pub turns: Vec<TurnSummary>,
}

impl DesignReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

pub fn build_report(s: &Session, registry: &WorkflowRegistry) -> Result<DesignReport, EngineError> {
    if s.status != Status::Completed {
        return Err(EngineError::SessionIncomplete);
    }
    let mut artifacts: BTreeMap<String, Value> = BTreeMap::new();
    for task in s.task_queue() {
        if let Some(def) = registry.machine(task) {
            for key in def.declared_artifacts() {
                artifacts.insert(key, Value::Null);
            }
        }
    }
    for (k, a) in &s.artifacts {
        artifacts.insert(k.clone(), a.value.clone());
    }

    let mut decisions: Vec<(usize, Decision)> = s
        .artifacts
        .iter()
        .filter(|(_, a)| a.source == ArtifactSource::Answer)
        .filter_map(|(k, a)| {
            let idx = a.turn?;
            let turn = s.history.get(idx)?;
            Some((
                idx,
                Decision {
                    task: turn.task.clone(),
                    state_id: turn.state_id.clone(),
                    key: k.clone(),
                    value: display_value(&a.value),
                    responder: turn.responder,
                },
            ))
        })
        .collect();
    decisions.sort_by(|a, b| (a.0, &a.1.key).cmp(&(b.0, &b.1.key)));
    let decisions = decisions.into_iter().map(|(_, d)| d).collect();

    let acknowledgments = s
        .gates
        .iter()
        .filter(|g| g.triggered)
        .filter_map(|g| {
            Some(Acknowledgment {
                state_id: g.state_id.clone(),
                organism_answer: g.organism_answer.clone(),
                acknowledgment: g.acknowledgment.clone()?,
                moratorium_reference: g.moratorium_reference.clone()?,
            })
        })
        .collect();

    let get = |k: &str| s.artifact(k).cloned().unwrap_or(Value::Null);
    Ok(DesignReport {
        mode: s.mode(),
        request: s.header.request.clone(),
        tasks: s.task_queue().to_vec(),
        decisions,
        guides: get("guides"),
        off_target: get("off_target"),
        primers: get("primers"),
        protocol: get("protocol"),
        acknowledgments,
        artifacts,
        turns: s
            .history
            .iter()
            .map(|t| TurnSummary {
                index: t.index,
                state_id: t.state_id.clone(),
                responder: t.responder,
                response: t.response.clone(),
                kind: t.kind,
                outcome_label: t.outcome_label.clone(),
                overrides: t.overrides.clone(),
            })
            .collect(),
    })
}
