use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use super::def::{SafetyTag, StateDef, WorkflowDef};
use super::WorkflowError;
use crate::planner::{MetaTask, TaskEntry, TaskTable};
use crate::template;
use crate::tools::{GUIDE_DESIGN_TOOL, TOOL_NAMES};

/// Artifact keys that may be filled from the session request.
pub const REQUEST_FIELDS: [&str; 3] = ["request", "species", "gene"];

pub const CATALOG_FILE: &str = "catalog.toml";

/// Table grouping and meta pipelines, kept beside the machine documents.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    #[serde(default, rename = "group")]
    pub groups: Vec<CatalogGroup>,
    #[serde(default)]
    pub pipelines: BTreeMap<MetaTask, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogGroup {
    pub heading: String,
    pub tasks: Vec<String>,
}

impl Catalog {
    pub fn parse_toml(text: &str) -> Result<Self, WorkflowError> {
        toml::from_str(text).map_err(|e| WorkflowError::Parse {
            document: CATALOG_FILE.into(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct WorkflowRegistry {
    machines: BTreeMap<String, WorkflowDef>,
    table: TaskTable,
    /// Non-fatal findings (e.g. unreachable states).
    pub warnings: Vec<String>,
}

/// A guide-design state reachable from its machine's start without passing
/// an organism checkpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateViolation {
    pub task: String,
    pub state: String,
}

/// States of `def` that run guide design and can be reached from the start
/// along a path that avoids every organism checkpoint.
pub fn gate_violations(def: &WorkflowDef) -> Vec<GateViolation> {
    let open = def.reachable_from_start(|s| !s.has_tag(SafetyTag::OrganismCheckpoint));
    def.states
        .iter()
        .filter(|s| is_guide_design(s) && open.contains(s.id.as_str()))
        .map(|s| GateViolation {
            task: def.task_name.clone(),
            state: s.id.clone(),
        })
        .collect()
}

pub fn is_guide_design(s: &StateDef) -> bool {
    s.tool.as_ref().is_some_and(|t| t.name == GUIDE_DESIGN_TOOL)
}

impl WorkflowRegistry {
    /// Builds a registry from `(source name, TOML text)` documents plus an
    /// optional catalog. Without a catalog the table follows document order
    /// and there are no meta pipelines.
    pub fn load(documents: &[(String, String)], catalog: Option<&str>) -> Result<Self, WorkflowError> {
        let mut defs = Vec::new();
        for (source, text) in documents {
            defs.push(WorkflowDef::parse_toml(source, text)?);
        }
        let catalog = match catalog {
            Some(text) => Some(Catalog::parse_toml(text)?),
            None => None,
        };
        Self::from_defs(defs, catalog)
    }

    /// Loads every `*.toml` under `dir` (recursively, in path order);
    /// `catalog.toml` at the top level is the catalog.
    pub fn load_dir(dir: &Path) -> Result<Self, WorkflowError> {
        let mut files = Vec::new();
        collect_toml(dir, &mut files)?;
        files.sort();
        let catalog_path = dir.join(CATALOG_FILE);
        let mut docs = Vec::new();
        let mut catalog = None;
        for path in files {
            let text = std::fs::read_to_string(&path).map_err(|e| WorkflowError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            if path == catalog_path {
                catalog = Some(text);
            } else {
                let name = path.strip_prefix(dir).unwrap_or(&path).display().to_string();
                docs.push((name, text));
            }
        }
        Self::load(&docs, catalog.as_deref())
    }

    pub fn from_defs(defs: Vec<WorkflowDef>, catalog: Option<Catalog>) -> Result<Self, WorkflowError> {
        let mut machines = BTreeMap::new();
        let mut state_ids = BTreeSet::new();
        let mut warnings = Vec::new();
        let mut order = Vec::new();
        for def in defs {
            warnings.extend(def.validate(&TOOL_NAMES)?);
            for s in &def.states {
                if !state_ids.insert(s.id.clone()) {
                    return Err(WorkflowError::DuplicateStateId(s.id.clone()));
                }
            }
            if machines.contains_key(&def.task_name) {
                return Err(WorkflowError::DuplicateTask(def.task_name.clone()));
            }
            if let Some(v) = gate_violations(&def).into_iter().next() {
                return Err(WorkflowError::GateBypass {
                    task: v.task,
                    state: v.state,
                });
            }
            order.push(def.task_name.clone());
            machines.insert(def.task_name.clone(), def);
        }

        let (entries, pipelines) = match catalog {
            Some(cat) => {
                let mut entries = Vec::new();
                let mut listed = BTreeSet::new();
                for g in &cat.groups {
                    for t in &g.tasks {
                        let def = machines.get(t).ok_or_else(|| WorkflowError::UnknownTask(t.clone()))?;
                        if !listed.insert(t.clone()) {
                            return Err(WorkflowError::DuplicateTask(t.clone()));
                        }
                        entries.push(entry(def, &g.heading));
                    }
                }
                if let Some(missing) = order.iter().find(|t| !listed.contains(*t)) {
                    return Err(WorkflowError::Catalog(format!("task `{missing}` is not listed in any group")));
                }
                (entries, cat.pipelines)
            }
            None => (order.iter().map(|t| entry(&machines[t], "")).collect(), BTreeMap::new()),
        };
        let table = TaskTable::new(entries, pipelines).map_err(WorkflowError::Table)?;

        let reg = Self {
            machines,
            table,
            warnings,
        };
        reg.check_placeholders()?;
        Ok(reg)
    }

    /// Every instruction placeholder and required tool argument must be a
    /// request field or an artifact written by an earlier state of the same
    /// machine or by a machine it depends on.
    fn check_placeholders(&self) -> Result<(), WorkflowError> {
        for def in self.machines.values() {
            let mut upstream: BTreeSet<String> = REQUEST_FIELDS.iter().map(|s| s.to_string()).collect();
            for dep in self.dependency_closure(&def.task_name) {
                upstream.extend(self.machines[&dep].declared_artifacts());
            }
            let ancestors = def.ancestor_writes();
            for s in &def.states {
                let known = |k: &str| upstream.contains(k) || ancestors[s.id.as_str()].contains(k);
                let names = template::placeholders(&s.instruction).unwrap_or_default();
                let required_args = s
                    .tool
                    .iter()
                    .flat_map(|t| t.artifact_refs())
                    .filter(|(_, optional)| !optional)
                    .map(|(k, _)| k.to_string());
                for name in names.into_iter().chain(required_args) {
                    if !known(&name) {
                        return Err(WorkflowError::UnknownPlaceholder {
                            state: s.id.clone(),
                            name,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn dependency_closure(&self, task: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![task.to_string()];
        while let Some(t) = stack.pop() {
            if let Some(def) = self.machines.get(&t) {
                for d in &def.depends_on {
                    if out.insert(d.clone()) {
                        stack.push(d.clone());
                    }
                }
            }
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.machines.is_empty()
    }

    pub fn len(&self) -> usize {
        self.machines.len()
    }

    pub fn machine(&self, task: &str) -> Option<&WorkflowDef> {
        self.machines.get(task)
    }

    pub fn machines(&self) -> impl Iterator<Item = &WorkflowDef> {
        self.machines.values()
    }

    pub fn task_names(&self) -> impl Iterator<Item = &str> {
        self.table.entries().iter().map(|e| e.name.as_str())
    }

    pub fn task_table(&self) -> &TaskTable {
        &self.table
    }

    /// Finds a state and the machine that owns it.
    pub fn state(&self, state_id: &str) -> Option<(&WorkflowDef, &StateDef)> {
        self.machines
            .values()
            .find_map(|m| m.state(state_id).map(|s| (m, s)))
    }
}

fn entry(def: &WorkflowDef, group: &str) -> TaskEntry {
    TaskEntry {
        name: def.task_name.clone(),
        description: def.description.clone(),
        deps: def.depends_on.clone(),
        group: group.to_string(),
    }
}

fn collect_toml(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), WorkflowError> {
    let io = |e: std::io::Error| WorkflowError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    };
    for item in std::fs::read_dir(dir).map_err(io)? {
        let path = item.map_err(io)?.path();
        if path.is_dir() {
            collect_toml(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "toml") {
            out.push(path);
        }
    }
    Ok(())
}
