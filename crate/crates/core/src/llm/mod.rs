//! Prompt construction, provider calls and structured-response parsing.

mod http;
mod parse;
mod prompts;
mod provider;
mod scripted;

pub use http::HttpProvider;
pub use parse::{parse_structured, serialize_structured, FieldMap, FieldValue, ParseError};
pub use prompts::{
    build_autopilot_prompt, build_decomposition_prompt, build_qa_prompt, with_choice_correction, with_repair_note,
    PromptBundle, TemplateId, AUTOPILOT_TEMPLATE, DECOMPOSITION_TEMPLATE, QA_TEMPLATE,
};
pub use provider::{complete, AuditLog, AuditingProvider, CompletionProvider, ProviderConfig, ProviderError, SharedProvider};
pub use scripted::{Script, ScriptEntry, ScriptedProvider};

use crate::safety::SequenceFinding;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GatewayError {
    #[error("{message}")]
    FilterBlocked {
        field: String,
        message: String,
        findings: Vec<SequenceFinding>,
    },
    #[error("provider timed out")]
    ProviderTimeout,
    #[error("provider transport error: {0}")]
    ProviderTransport(String),
    #[error("scripted provider has no entry for prompt starting {0:?}")]
    ScriptMiss(String),
    #[error("gateway configuration: {0}")]
    Config(String),
    #[error("unparsable response: {0}")]
    Unparsable(ParseError),
}

impl From<ProviderError> for GatewayError {
    fn from(e: ProviderError) -> Self {
        match e {
            ProviderError::Timeout => GatewayError::ProviderTimeout,
            ProviderError::Transport(m) => GatewayError::ProviderTransport(m),
            ProviderError::ScriptMiss(m) => GatewayError::ScriptMiss(m),
        }
    }
}

/// Completes `bundle` and parses the reply for `keys`. On a parse failure
/// the prompt is resent once with the parser error appended.
pub fn complete_structured(
    bundle: &PromptBundle,
    provider: &SharedProvider,
    config: &ProviderConfig,
    keys: &[&str],
) -> Result<FieldMap, GatewayError> {
    let raw = complete(bundle, provider, config)?;
    match parse_structured(&raw, keys) {
        Ok(f) => Ok(f),
        Err(first) => {
            let retry = with_repair_note(bundle, &first.to_string());
            let raw = complete(&retry, provider, config)?;
            parse_structured(&raw, keys).map_err(GatewayError::Unparsable)
        }
    }
}
