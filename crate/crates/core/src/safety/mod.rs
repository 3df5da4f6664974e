//! Privacy filter for outbound text and the human-organism gate.

mod gate;
mod scan;

pub use gate::{organism_gate, GateConfig, GateDecision, GateRecord, OrganismTable, HUMAN};
pub use scan::{
    redact, redact_findings, scan_nucleotide_runs, SequenceFinding, DEFAULT_THRESHOLD,
    REDACTION_MARK,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SafetyError {
    #[error("organism table line {line}: {message}")]
    Table { line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid safety config: {0}")]
    Config(String),
}

/// Result of checking a payload before it leaves the process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OutboundCheck {
    Clean,
    Blocked {
        findings: Vec<SequenceFinding>,
        user_message: String,
    },
}

impl OutboundCheck {
    pub fn is_clean(&self) -> bool {
        matches!(self, OutboundCheck::Clean)
    }
}

/// Safety settings shared by the engine and the gateway.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafetyConfig {
    #[serde(default = "default_threshold")]
    pub threshold: usize,
    #[serde(flatten)]
    pub gate: GateConfig,
}

fn default_threshold() -> usize {
    DEFAULT_THRESHOLD
}

impl Default for SafetyConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            gate: GateConfig::default(),
        }
    }
}

impl SafetyConfig {
    pub fn parse_toml(text: &str) -> Result<Self, SafetyError> {
        let cfg: SafetyConfig = toml::from_str(text).map_err(|e| SafetyError::Config(e.to_string()))?;
        if cfg.threshold == 0 {
            return Err(SafetyError::Config("threshold must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, SafetyError> {
        let text = std::fs::read_to_string(path).map_err(|e| SafetyError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse_toml(&text)
    }

    pub fn enforce_outbound(&self, text: &str) -> OutboundCheck {
        enforce_outbound_with(text, self.threshold)
    }

    pub fn redact(&self, text: &str) -> String {
        redact(text, self.threshold)
    }
}

pub fn enforce_outbound(text: &str) -> OutboundCheck {
    enforce_outbound_with(text, DEFAULT_THRESHOLD)
}

pub fn enforce_outbound_with(text: &str, threshold: usize) -> OutboundCheck {
    let findings = scan_nucleotide_runs(text, threshold);
    if findings.is_empty() {
        return OutboundCheck::Clean;
    }
    let spans = findings
        .iter()
        .map(|f| format!("characters {}..{} ({} nt)", f.start, f.end, f.length))
        .collect::<Vec<_>>()
        .join(", ");
    OutboundCheck::Blocked {
        user_message: format!(
            "Your input contains nucleotide sequences of {threshold} or more bases, which are \
             never sent to external language models. Please delete them and try again: {spans}."
        ),
        findings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_prose() {
        assert!(enforce_outbound("Which Cas system suits multiplexed edits?").is_clean());
    }

    #[test]
    fn planted_24mer_blocked() {
        let text = "please design around ACGTTGCAACGTTGCAACGTTGCA in exon 2";
        match enforce_outbound(text) {
            OutboundCheck::Blocked {
                findings,
                user_message,
            } => {
                assert_eq!(findings.len(), 1);
                assert_eq!(findings[0].length, 24);
                assert!(user_message.contains("21..45"));
            }
            OutboundCheck::Clean => panic!("should block"),
        }
    }

    #[test]
    fn two_runs_two_sorted_findings() {
        let text = "a: GACTATCATATGCTTACCGT and b: TTTTGGGGCCCCAAAATTTTGGGG";
        let OutboundCheck::Blocked { findings, .. } = enforce_outbound(text) else {
            panic!("should block")
        };
        assert_eq!(findings.len(), 2);
        assert!(findings[0].start < findings[1].start);
    }

    #[test]
    fn config_from_toml() {
        let cfg = SafetyConfig::parse_toml(
            "threshold = 25\nwarning = \"w\"\nmoratorium_reference = \"ref\"\n",
        )
        .unwrap();
        assert_eq!(cfg.threshold, 25);
        assert_eq!(cfg.gate.warning, "w");
        assert!(SafetyConfig::parse_toml("threshold = 0\nwarning = \"w\"\nmoratorium_reference = \"r\"").is_err());
    }
}
