//! Task planning: predefined meta pipelines, LLM decomposition, and the
//! deterministic dependency repair that both go through.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::llm::{self, build_decomposition_prompt, GatewayError, ProviderConfig, SharedProvider};
use crate::safety::SafetyConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskEntry {
    pub name: String,
    pub description: String,
    pub deps: Vec<String>,
    /// Heading the entry is listed under in the task description table.
    #[serde(default)]
    pub group: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaTask {
    Knockout,
    BaseEditing,
    PrimeEditing,
    ActivationInterference,
}

impl MetaTask {
    pub const ALL: [MetaTask; 4] = [
        MetaTask::Knockout,
        MetaTask::BaseEditing,
        MetaTask::PrimeEditing,
        MetaTask::ActivationInterference,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetaTask::Knockout => "knockout",
            MetaTask::BaseEditing => "base_editing",
            MetaTask::PrimeEditing => "prime_editing",
            MetaTask::ActivationInterference => "activation_interference",
        }
    }
}

impl fmt::Display for MetaTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetaTask {
    type Err = PlannerError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetaTask::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| PlannerError::UnknownMetaTask(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlannerError {
    #[error("unknown meta task `{0}`")]
    UnknownMetaTask(String),
    #[error("meta task `{0}` has no pipeline in the loaded workflows")]
    MissingPipeline(MetaTask),
    #[error("unknown task name `{0}`")]
    UnknownTaskName(String),
    #[error("task table has a dependency cycle through `{0}`")]
    CyclicDependencies(String),
    #[error("duplicate task `{0}` in the task table")]
    DuplicateTask(String),
    #[error("task `{task}` depends on unknown task `{dep}`")]
    UnknownDependency { task: String, dep: String },
    #[error("request is empty")]
    EmptyRequest,
    #[error("provider returned an empty task list")]
    EmptyPlanFromProvider,
    #[error("provider response could not be parsed after one repair attempt: {0}")]
    UnparsableResponse(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// Registry of plannable tasks with their dependencies and the predefined
/// meta pipelines.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskTable {
    entries: Vec<TaskEntry>,
    #[serde(default)]
    pipelines: BTreeMap<MetaTask, Vec<String>>,
}

impl TaskTable {
    pub fn new(entries: Vec<TaskEntry>, pipelines: BTreeMap<MetaTask, Vec<String>>) -> Result<Self, PlannerError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(PlannerError::DuplicateTask(e.name.clone()));
            }
        }
        for e in &entries {
            for d in &e.deps {
                if !seen.contains(d.as_str()) {
                    return Err(PlannerError::UnknownDependency {
                        task: e.name.clone(),
                        dep: d.clone(),
                    });
                }
            }
        }
        for tasks in pipelines.values() {
            for t in tasks {
                if !seen.contains(t.as_str()) {
                    return Err(PlannerError::UnknownTaskName(t.clone()));
                }
            }
        }
        let table = Self { entries, pipelines };
        table.check_acyclic()?;
        Ok(table)
    }

    fn check_acyclic(&self) -> Result<(), PlannerError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Visiting,
            Done,
        }
        fn visit<'a>(t: &'a TaskTable, name: &'a str, marks: &mut HashMap<&'a str, Mark>) -> Result<(), PlannerError> {
            match marks.get(name) {
                Some(Mark::Done) => return Ok(()),
                Some(Mark::Visiting) => return Err(PlannerError::CyclicDependencies(name.to_string())),
                None => {}
            }
            marks.insert(name, Mark::Visiting);
            if let Some(e) = t.get(name) {
                for d in &e.deps {
                    visit(t, d, marks)?;
                }
            }
            marks.insert(name, Mark::Done);
            Ok(())
        }
        let mut marks = HashMap::new();
        for e in &self.entries {
            visit(self, &e.name, &mut marks)?;
        }
        Ok(())
    }

    pub fn entries(&self) -> &[TaskEntry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&TaskEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pipeline(&self, meta: MetaTask) -> Option<&[String]> {
        self.pipelines.get(&meta).map(Vec::as_slice)
    }

    /// Text of the task description table handed to the planner LLM.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let mut current: Option<&str> = None;
        for e in &self.entries {
            if current != Some(e.group.as_str()) {
                if current.is_some() {
                    out.push('\n');
                }
                if !e.group.is_empty() {
                    out.push_str(&e.group);
                    out.push_str("\n\n");
                }
                out.push_str("task name: task descriptions: dependency\n");
                current = Some(e.group.as_str());
            }
            let dep = if e.deps.is_empty() {
                "none".to_string()
            } else {
                format!("needs to complete {} first", e.deps.join(" and "))
            };
            out.push_str(&format!("{}: {} : {}\n", e.name, e.description, dep));
        }
        out.trim_end_matches('\n').to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanProvenance {
    MetaPipeline,
    LlmDecomposition,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum RepairEntry {
    /// A missing dependency was inserted immediately before its dependent.
    Inserted { task: String, before: String },
    /// A dependency listed after its dependent was moved in front of it.
    Moved { task: String, before: String },
    DroppedDuplicate { task: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub tasks: Vec<String>,
    pub provenance: PlanProvenance,
    #[serde(default)]
    pub repair_log: Vec<RepairEntry>,
    /// Planner reasoning kept for audit (LLM decomposition only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thoughts: Option<String>,
}

/// Checks names and makes the list dependency-closed. Missing dependencies
/// are inserted (transitively) immediately before the first task that needs
/// them; dependencies that appear too late are moved forward. Independent
/// tasks keep their original relative order.
pub fn validate_plan(tasks: &[String], table: &TaskTable) -> Result<Plan, PlannerError> {
    for t in tasks {
        if !table.contains(t) {
            return Err(PlannerError::UnknownTaskName(t.clone()));
        }
    }
    let mut repair_log = Vec::new();
    let mut requested: Vec<&str> = Vec::new();
    for t in tasks {
        if requested.contains(&t.as_str()) {
            repair_log.push(RepairEntry::DroppedDuplicate { task: t.clone() });
        } else {
            requested.push(t);
        }
    }

    let mut out: Vec<String> = Vec::new();
    let mut placed: HashSet<String> = HashSet::new();
    for (idx, t) in requested.iter().enumerate() {
        let later: HashSet<&str> = requested[idx + 1..].iter().copied().collect();
        let mut visiting = Vec::new();
        place(t, table, &later, &mut out, &mut placed, &mut visiting, &mut repair_log)?;
    }
    Ok(Plan {
        tasks: out,
        provenance: PlanProvenance::Manual,
        repair_log,
        thoughts: None,
    })
}

fn place(
    task: &str,
    table: &TaskTable,
    later: &HashSet<&str>,
    out: &mut Vec<String>,
    placed: &mut HashSet<String>,
    visiting: &mut Vec<String>,
    log: &mut Vec<RepairEntry>,
) -> Result<(), PlannerError> {
    if placed.contains(task) {
        return Ok(());
    }
    if visiting.iter().any(|v| v == task) {
        return Err(PlannerError::CyclicDependencies(task.to_string()));
    }
    visiting.push(task.to_string());
    let entry = table
        .get(task)
        .ok_or_else(|| PlannerError::UnknownTaskName(task.to_string()))?;
    for dep in &entry.deps {
        if placed.contains(dep) {
            continue;
        }
        let action = if later.contains(dep.as_str()) {
            RepairEntry::Moved {
                task: dep.clone(),
                before: task.to_string(),
            }
        } else {
            RepairEntry::Inserted {
                task: dep.clone(),
                before: task.to_string(),
            }
        };
        log.push(action);
        place(dep, table, later, out, placed, visiting, log)?;
    }
    visiting.pop();
    placed.insert(task.to_string());
    out.push(task.to_string());
    Ok(())
}

pub fn meta_pipeline(meta_task: &str, table: &TaskTable) -> Result<Plan, PlannerError> {
    let meta: MetaTask = meta_task.parse()?;
    let tasks = table.pipeline(meta).ok_or(PlannerError::MissingPipeline(meta))?;
    let mut plan = validate_plan(tasks, table)?;
    plan.provenance = PlanProvenance::MetaPipeline;
    Ok(plan)
}

pub const DECOMPOSITION_KEYS: [&str; 2] = ["Thoughts", "Tasks"];

/// Asks the provider to decompose `request` into tasks, then validates and
/// repairs the answer against `table`.
pub fn decompose(
    request: &str,
    table: &TaskTable,
    provider: &SharedProvider,
    config: &ProviderConfig,
    safety: &SafetyConfig,
) -> Result<Plan, PlannerError> {
    if request.trim().is_empty() {
        return Err(PlannerError::EmptyRequest);
    }
    let bundle = build_decomposition_prompt(request, table, safety)?;
    let fields = match llm::complete_structured(&bundle, provider, config, &DECOMPOSITION_KEYS) {
        Ok(f) => f,
        Err(GatewayError::Unparsable(e)) => return Err(PlannerError::UnparsableResponse(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let tasks = fields["Tasks"]
        .as_list()
        .ok_or_else(|| PlannerError::UnparsableResponse("`Tasks` must be a list of task names".into()))?;
    let tasks: Vec<String> = tasks.iter().map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect();
    if tasks.is_empty() {
        return Err(PlannerError::EmptyPlanFromProvider);
    }
    let mut plan = validate_plan(&tasks, table)?;
    plan.provenance = PlanProvenance::LlmDecomposition;
    plan.thoughts = fields["Thoughts"].as_text().map(str::to_string);
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(name: &str, deps: &[&str]) -> TaskEntry {
        TaskEntry {
            name: name.into(),
            description: format!("{name} description"),
            deps: deps.iter().map(|d| d.to_string()).collect(),
            group: "For knockout".into(),
        }
    }

    fn knockout_table() -> TaskTable {
        TaskTable::new(
            vec![
                entry("knockout.StateStep1", &[]),
                entry("knockout.StateStep2", &[]),
                entry("knockout.StateStep3", &["knockout.StateStep1"]),
                entry("knockout.StateStep4", &["knockout.StateStep2"]),
            ],
            BTreeMap::from([(
                MetaTask::Knockout,
                vec![
                    "knockout.StateStep1".to_string(),
                    "knockout.StateStep2".into(),
                    "knockout.StateStep3".into(),
                    "knockout.StateStep4".into(),
                ],
            )]),
        )
        .unwrap()
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn inserts_missing_dependency() {
        let plan = validate_plan(&names(&["knockout.StateStep4"]), &knockout_table()).unwrap();
        assert_eq!(plan.tasks, names(&["knockout.StateStep2", "knockout.StateStep4"]));
        assert_eq!(
            plan.repair_log,
            vec![RepairEntry::Inserted {
                task: "knockout.StateStep2".into(),
                before: "knockout.StateStep4".into()
            }]
        );
    }

    #[test]
    fn valid_plan_unchanged() {
        let input = names(&["knockout.StateStep1", "knockout.StateStep3"]);
        let plan = validate_plan(&input, &knockout_table()).unwrap();
        assert_eq!(plan.tasks, input);
        assert!(plan.repair_log.is_empty());
    }

    #[test]
    fn moves_late_dependency() {
        let plan = validate_plan(&names(&["knockout.StateStep3", "knockout.StateStep1"]), &knockout_table()).unwrap();
        assert_eq!(plan.tasks, names(&["knockout.StateStep1", "knockout.StateStep3"]));
        assert!(matches!(plan.repair_log[0], RepairEntry::Moved { .. }));
    }

    #[test]
    fn duplicates_dropped() {
        let plan = validate_plan(&names(&["knockout.StateStep1", "knockout.StateStep1"]), &knockout_table()).unwrap();
        assert_eq!(plan.tasks, names(&["knockout.StateStep1"]));
        assert_eq!(plan.repair_log.len(), 1);
    }

    #[test]
    fn unknown_name() {
        assert_eq!(
            validate_plan(&names(&["knockout.StateStep9"]), &knockout_table()),
            Err(PlannerError::UnknownTaskName("knockout.StateStep9".into()))
        );
    }

    #[test]
    fn table_rejects_cycles_and_dangling() {
        let cyc = TaskTable::new(vec![entry("a", &["b"]), entry("b", &["a"])], BTreeMap::new());
        assert!(matches!(cyc, Err(PlannerError::CyclicDependencies(_))));
        let dangling = TaskTable::new(vec![entry("a", &["zz"])], BTreeMap::new());
        assert!(matches!(dangling, Err(PlannerError::UnknownDependency { .. })));
        let dup = TaskTable::new(vec![entry("a", &[]), entry("a", &[])], BTreeMap::new());
        assert!(matches!(dup, Err(PlannerError::DuplicateTask(_))));
    }

    #[test]
    fn meta_pipeline_lookup() {
        let t = knockout_table();
        let plan = meta_pipeline("knockout", &t).unwrap();
        assert_eq!(plan.provenance, PlanProvenance::MetaPipeline);
        assert!(plan.repair_log.is_empty());
        assert_eq!(
            meta_pipeline("transcriptome_editing", &t),
            Err(PlannerError::UnknownMetaTask("transcriptome_editing".into()))
        );
        assert_eq!(
            meta_pipeline("prime_editing", &t),
            Err(PlannerError::MissingPipeline(MetaTask::PrimeEditing))
        );
    }

    #[test]
    fn describe_format() {
        let text = knockout_table().describe();
        assert!(text.starts_with("For knockout\n\ntask name: task descriptions: dependency\n"));
        assert!(text.contains(
            "knockout.StateStep3: knockout.StateStep3 description : needs to complete knockout.StateStep1 first"
        ));
        assert!(text.contains("knockout.StateStep1: knockout.StateStep1 description : none"));
        assert_eq!(TaskTable::default().describe(), "");
    }
}
