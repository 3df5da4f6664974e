//! Human-organism acknowledgment gate.

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::SafetyError;

pub const HUMAN: &str = "human";

/// Organism synonym table. One line per canonical organism:
///
/// ```text
/// human: homo sapiens, patient-derived, a375, hek293t
/// mouse: mus musculus, murine
/// ```
///
/// Blank lines and `#` comments are ignored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OrganismTable {
    entries: Vec<(String, Vec<String>)>,
}

impl OrganismTable {
    pub fn parse(text: &str) -> Result<Self, SafetyError> {
        let mut entries: Vec<(String, Vec<String>)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (canonical, rest) = line.split_once(':').ok_or(SafetyError::Table {
                line: idx + 1,
                message: "expected `canonical: synonym, ...`".into(),
            })?;
            let canonical = normalize(canonical);
            if canonical.is_empty() {
                return Err(SafetyError::Table {
                    line: idx + 1,
                    message: "empty organism name".into(),
                });
            }
            let mut synonyms = vec![canonical.clone()];
            synonyms.extend(
                rest.split(',')
                    .map(normalize)
                    .filter(|s| !s.is_empty()),
            );
            if entries.iter().any(|(c, _)| *c == canonical) {
                return Err(SafetyError::Table {
                    line: idx + 1,
                    message: format!("duplicate organism `{canonical}`"),
                });
            }
            entries.push((canonical, synonyms));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, SafetyError> {
        let text = std::fs::read_to_string(path).map_err(|e| SafetyError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn organisms(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(c, _)| c.as_str())
    }

    pub fn synonyms(&self, canonical: &str) -> Option<&[String]> {
        self.entries
            .iter()
            .find(|(c, _)| c == canonical)
            .map(|(_, s)| s.as_slice())
    }

    /// Every organism mentioned in `text`, ordered by first mention.
    pub fn mentions(&self, text: &str) -> Vec<&str> {
        let hay = format!(" {} ", normalize(text));
        let mut hits: Vec<(usize, &str)> = Vec::new();
        for (canonical, synonyms) in &self.entries {
            let first = synonyms
                .iter()
                .filter_map(|s| hay.find(&format!(" {s} ")))
                .min();
            if let Some(pos) = first {
                hits.push((pos, canonical.as_str()));
            }
        }
        hits.sort();
        hits.into_iter().map(|(_, c)| c).collect()
    }

    /// The first organism mentioned in `text`.
    pub fn canonical(&self, text: &str) -> Option<&str> {
        self.mentions(text).into_iter().next()
    }

    pub fn is_human(&self, text: &str) -> bool {
        self.mentions(text).contains(&HUMAN)
    }
}

/// Lowercases and collapses everything that is not a letter, digit, `.` or
/// `-` into single spaces.
fn normalize(text: &str) -> String {
    let mapped: String = text
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c == '.' || c == '-' {
                c.to_ascii_lowercase()
            } else {
                ' '
            }
        })
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateConfig {
    pub warning: String,
    pub moratorium_reference: String,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            warning: "You are designing a gene-editing experiment on human material. \
                      Germline and embryo genome editing are prohibited in many countries \
                      and are subject to an international moratorium on heritable editing. \
                      Confirm that you understand the risk and have read the guideline \
                      before proceeding."
                .into(),
            moratorium_reference: "https://www.nature.com/articles/d41586-019-00726-5".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum GateDecision {
    Pass,
    RequireAck {
        warning: String,
        moratorium_reference: String,
    },
}

impl GateDecision {
    pub fn requires_ack(&self) -> bool {
        matches!(self, GateDecision::RequireAck { .. })
    }
}

pub fn organism_gate(answer: &str, table: &OrganismTable, config: &GateConfig) -> GateDecision {
    if table.is_human(answer) {
        GateDecision::RequireAck {
            warning: config.warning.clone(),
            moratorium_reference: config.moratorium_reference.clone(),
        }
    } else {
        GateDecision::Pass
    }
}

/// Gate state recorded in a session each time an organism checkpoint is answered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateRecord {
    pub state_id: String,
    pub organism_answer: String,
    pub triggered: bool,
    pub acknowledgment: Option<String>,
    pub moratorium_reference: Option<String>,
    pub timestamp_ms: u64,
}

impl GateRecord {
    pub fn is_satisfied(&self) -> bool {
        !self.triggered || self.acknowledgment.is_some()
    }
}
