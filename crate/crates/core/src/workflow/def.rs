use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::WorkflowError;
use crate::template;

/// Transition target that ends the current task machine.
pub const END: &str = "END";
/// Outcome label used by every non-choice state and by choice states without
/// a per-option transition.
pub const NEXT: &str = "next";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputKind {
    FreeText,
    Choice { options: Vec<String> },
    Acknowledgment,
    None,
}

impl InputKind {
    pub fn options(&self) -> &[String] {
        match self {
            InputKind::Choice { options } => options,
            _ => &[],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InputKind::FreeText => "free_text",
            InputKind::Choice { .. } => "choice",
            InputKind::Acknowledgment => "acknowledgment",
            InputKind::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SafetyTag {
    OrganismCheckpoint,
    RequestsSequence,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Validator {
    #[default]
    Any,
    NucleotideSequence {
        min_len: usize,
        max_len: usize,
    },
    GeneSymbol,
}

/// Tool call attached to a state. String arguments of the form `@key` are
/// read from the session artifacts (`@key?` when the artifact is optional);
/// everything else is passed literally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolBinding {
    pub name: String,
    #[serde(default)]
    pub args: BTreeMap<String, Value>,
    /// Artifact key the tool result is stored under.
    pub output: String,
}

impl ToolBinding {
    /// Artifact keys referenced by the arguments, with their optionality.
    pub fn artifact_refs(&self) -> Vec<(&str, bool)> {
        self.args
            .values()
            .filter_map(Value::as_str)
            .filter_map(|s| s.strip_prefix('@'))
            .map(|k| match k.strip_suffix('?') {
                Some(k) => (k, true),
                None => (k, false),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDef {
    pub id: String,
    pub instruction: String,
    pub input: InputKind,
    /// Artifact written with the user's answer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<String>,
    /// Stored value per choice label; the label itself when absent.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, String>,
    /// Artifact offered as the default answer (request autofill).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_from: Option<String>,
    #[serde(default)]
    pub validator: Validator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool: Option<ToolBinding>,
    pub transitions: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<SafetyTag>,
}

impl StateDef {
    pub fn has_tag(&self, tag: SafetyTag) -> bool {
        self.tags.contains(&tag)
    }

    /// Keys this state may set.
    pub fn artifact_writes(&self) -> Vec<&str> {
        self.record
            .iter()
            .map(String::as_str)
            .chain(self.tool.iter().map(|t| t.output.as_str()))
            .collect()
    }

    /// Outcome labels the engine can produce at this state.
    pub fn outcome_labels(&self) -> BTreeSet<String> {
        let mut labels = BTreeSet::from([NEXT.to_string()]);
        labels.extend(self.input.options().iter().cloned());
        labels
    }

    /// The label recorded for an accepted answer (`choice` is the matched
    /// option label for choice states).
    pub fn outcome_for(&self, choice: Option<&str>) -> &str {
        match choice {
            Some(label) if self.transitions.contains_key(label) => self
                .transitions
                .get_key_value(label)
                .map(|(k, _)| k.as_str())
                .unwrap_or(NEXT),
            _ => NEXT,
        }
    }

    pub fn stored_value(&self, label: &str) -> String {
        self.values.get(label).cloned().unwrap_or_else(|| label.to_string())
    }
}

/// One task's state machine, as written in a definition document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowDef {
    pub task_name: String,
    pub description: String,
    #[serde(default)]
    pub depends_on: Vec<String>,
    /// First state; defaults to the first listed state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<String>,
    pub states: Vec<StateDef>,
}

impl WorkflowDef {
    pub fn parse_toml(source: &str, text: &str) -> Result<Self, WorkflowError> {
        toml::from_str(text).map_err(|e| WorkflowError::Parse {
            document: source.to_string(),
            message: e.to_string(),
        })
    }

    pub fn start_state(&self) -> &str {
        self.start
            .as_deref()
            .or_else(|| self.states.first().map(|s| s.id.as_str()))
            .unwrap_or(END)
    }

    pub fn state(&self, id: &str) -> Option<&StateDef> {
        self.states.iter().find(|s| s.id == id)
    }

    /// Artifact keys any state of this machine may write.
    pub fn declared_artifacts(&self) -> BTreeSet<String> {
        self.states
            .iter()
            .flat_map(|s| s.artifact_writes())
            .map(str::to_string)
            .collect()
    }

    /// Structural checks that need only this document. `tools` is the set
    /// of registered tool names.
    pub fn validate(&self, tools: &[&str]) -> Result<Vec<String>, WorkflowError> {
        if self.states.is_empty() {
            return Err(self.invalid(&self.task_name, "machine has no states"));
        }
        let mut ids = BTreeSet::new();
        for s in &self.states {
            if !ids.insert(s.id.as_str()) {
                return Err(WorkflowError::DuplicateStateId(s.id.clone()));
            }
        }
        if self.state(self.start_state()).is_none() {
            return Err(WorkflowError::DanglingTransition {
                state: format!("{} (start)", self.task_name),
                target: self.start_state().to_string(),
            });
        }
        for s in &self.states {
            self.validate_state(s, tools)?;
        }
        let reachable = self.reachable_from_start(|_| true);
        Ok(self
            .states
            .iter()
            .filter(|s| !reachable.contains(s.id.as_str()))
            .map(|s| format!("state `{}` is unreachable from `{}`", s.id, self.start_state()))
            .collect())
    }

    fn invalid(&self, state: &str, message: &str) -> WorkflowError {
        WorkflowError::InvalidState {
            state: state.to_string(),
            message: message.to_string(),
        }
    }

    fn validate_state(&self, s: &StateDef, tools: &[&str]) -> Result<(), WorkflowError> {
        if let InputKind::Choice { options } = &s.input {
            let distinct: BTreeSet<String> = options.iter().map(|o| o.to_lowercase()).collect();
            if options.len() < 2 || distinct.len() != options.len() {
                return Err(self.invalid(&s.id, "choice states need at least two distinct options"));
            }
            if let Some(v) = s.values.keys().find(|k| !options.contains(k)) {
                return Err(self.invalid(&s.id, &format!("value mapping for unknown option `{v}`")));
            }
        } else if !s.values.is_empty() {
            return Err(self.invalid(&s.id, "value mappings only apply to choice states"));
        }
        if let Some(t) = &s.tool {
            if !tools.contains(&t.name.as_str()) {
                return Err(WorkflowError::UnknownToolBinding {
                    state: s.id.clone(),
                    tool: t.name.clone(),
                });
            }
        }
        if s.transitions.is_empty() {
            return Err(self.invalid(&s.id, "state has no transitions"));
        }
        let labels = s.outcome_labels();
        for (label, target) in &s.transitions {
            if !labels.contains(label) {
                return Err(self.invalid(&s.id, &format!("transition label `{label}` is not a possible outcome")));
            }
            if target != END && self.state(target).is_none() {
                return Err(WorkflowError::DanglingTransition {
                    state: s.id.clone(),
                    target: target.clone(),
                });
            }
        }
        let covered = s.transitions.contains_key(NEXT)
            || s.input.options().iter().all(|o| s.transitions.contains_key(o)) && !s.input.options().is_empty();
        if !covered {
            return Err(self.invalid(&s.id, "some outcomes have no transition"));
        }
        template::placeholders(&s.instruction).map_err(|e| self.invalid(&s.id, &e.to_string()))?;
        Ok(())
    }

    /// Successor state ids (END excluded).
    pub fn successors<'a>(&'a self, s: &'a StateDef) -> impl Iterator<Item = &'a str> + 'a {
        s.transitions.values().map(String::as_str).filter(|t| *t != END)
    }

    /// States reachable from the start without entering any state for which
    /// `may_enter` is false (the start itself is always considered).
    pub fn reachable_from_start<F>(&self, may_enter: F) -> BTreeSet<&str>
    where
        F: Fn(&StateDef) -> bool,
    {
        let mut seen = BTreeSet::new();
        let Some(start) = self.state(self.start_state()) else {
            return seen;
        };
        if !may_enter(start) {
            return seen;
        }
        let mut queue = VecDeque::from([start]);
        seen.insert(start.id.as_str());
        while let Some(s) = queue.pop_front() {
            for next in self.successors(s) {
                if let Some(n) = self.state(next) {
                    if may_enter(n) && seen.insert(n.id.as_str()) {
                        queue.push_back(n);
                    }
                }
            }
        }
        seen
    }

    /// For each state, the artifact keys written by any state that can
    /// precede it.
    pub fn ancestor_writes(&self) -> BTreeMap<&str, BTreeSet<String>> {
        let mut out = BTreeMap::new();
        for target in &self.states {
            let mut writes = BTreeSet::new();
            for s in &self.states {
                if s.id != target.id && self.can_reach(&s.id, &target.id) {
                    writes.extend(s.artifact_writes().into_iter().map(str::to_string));
                }
            }
            out.insert(target.id.as_str(), writes);
        }
        out
    }

    fn can_reach(&self, from: &str, to: &str) -> bool {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([from]);
        while let Some(id) = queue.pop_front() {
            let Some(s) = self.state(id) else { continue };
            for n in self.successors(s) {
                if n == to {
                    return true;
                }
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        false
    }
}
