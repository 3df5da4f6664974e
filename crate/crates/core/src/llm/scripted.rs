use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::provider::{CompletionProvider, ProviderError};
use super::GatewayError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    /// Every substring must occur in the prompt for the entry to match.
    #[serde(default)]
    pub contains: Vec<String>,
    pub response: String,
    /// Consumed after its first use when true.
    #[serde(default = "yes")]
    pub once: bool,
}

fn yes() -> bool {
    true
}

impl ScriptEntry {
    pub fn new(contains: &[&str], response: impl Into<String>) -> Self {
        Self {
            contains: contains.iter().map(|s| s.to_string()).collect(),
            response: response.into(),
            once: true,
        }
    }

    pub fn repeating(mut self) -> Self {
        self.once = false;
        self
    }

    fn matches(&self, prompt: &str) -> bool {
        self.contains.iter().all(|c| prompt.contains(c.as_str()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Script {
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub fallback: Option<String>,
    #[serde(default)]
    pub entries: Vec<ScriptEntry>,
}

impl Script {
    pub fn parse_json(text: &str) -> Result<Self, GatewayError> {
        serde_json::from_str(text).map_err(|e| GatewayError::Config(format!("script: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_json(&text)
    }
}

#[derive(Debug, Default)]
struct ScriptState {
    consumed: Vec<bool>,
    calls: Vec<String>,
}

/// Deterministic provider that answers from an ordered script. The first
/// unconsumed entry whose matchers all occur in the prompt wins. In strict
/// mode an unmatched prompt is a [`ProviderError::ScriptMiss`]; otherwise
/// the fallback response (or an empty object) is returned.
#[derive(Debug)]
pub struct ScriptedProvider {
    script: Script,
    state: Mutex<ScriptState>,
}

impl ScriptedProvider {
    pub fn new(script: Script) -> Self {
        let n = script.entries.len();
        Self {
            script,
            state: Mutex::new(ScriptState {
                consumed: vec![false; n],
                calls: Vec::new(),
            }),
        }
    }

    pub fn strict(entries: Vec<ScriptEntry>) -> Self {
        Self::new(Script {
            strict: true,
            fallback: None,
            entries,
        })
    }

    pub fn lenient(entries: Vec<ScriptEntry>, fallback: impl Into<String>) -> Self {
        Self::new(Script {
            strict: false,
            fallback: Some(fallback.into()),
            entries,
        })
    }

    pub fn calls(&self) -> Vec<String> {
        self.state.lock().calls.clone()
    }

    pub fn call_count(&self) -> usize {
        self.state.lock().calls.len()
    }

    /// Entries marked `once` that were never used.
    pub fn unused(&self) -> usize {
        let st = self.state.lock();
        self.script
            .entries
            .iter()
            .zip(&st.consumed)
            .filter(|(e, used)| e.once && !**used)
            .count()
    }
}

impl CompletionProvider for ScriptedProvider {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        let mut st = self.state.lock();
        st.calls.push(prompt.to_string());
        let hit = self
            .script
            .entries
            .iter()
            .enumerate()
            .find(|(i, e)| !(e.once && st.consumed[*i]) && e.matches(prompt));
        if let Some((i, e)) = hit {
            st.consumed[i] = true;
            return Ok(e.response.clone());
        }
        if self.script.strict {
            let head: String = prompt.chars().take(80).collect();
            return Err(ProviderError::ScriptMiss(head));
        }
        Ok(self.script.fallback.clone().unwrap_or_else(|| "{}".into()))
    }

    fn name(&self) -> &str {
        "scripted"
    }
}
