use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::GatewayError;
use crate::planner::TaskTable;
use crate::safety::{scan_nucleotide_runs, SafetyConfig};
use crate::template;

pub const DECOMPOSITION_TEMPLATE: &str = include_str!("templates/decomposition.txt");
pub const AUTOPILOT_TEMPLATE: &str = include_str!("templates/autopilot.txt");
pub const QA_TEMPLATE: &str = include_str!("templates/qa.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Decomposition,
    Autopilot,
    QaAnswer,
}

impl TemplateId {
    pub fn template(self) -> &'static str {
        match self {
            TemplateId::Decomposition => DECOMPOSITION_TEMPLATE,
            TemplateId::Autopilot => AUTOPILOT_TEMPLATE,
            TemplateId::QaAnswer => QA_TEMPLATE,
        }
    }
}

/// A fully rendered, filter-checked prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub template_id: TemplateId,
    pub filled_text: String,
    pub placeholders: BTreeMap<String, String>,
    /// Run length the text was checked against.
    pub filter_threshold: usize,
}

fn check(field: &str, value: &str, safety: &SafetyConfig) -> Result<(), GatewayError> {
    let findings = scan_nucleotide_runs(value, safety.threshold);
    if findings.is_empty() {
        return Ok(());
    }
    let spans = findings
        .iter()
        .map(|f| format!("{}..{} ({} nt)", f.start, f.end, f.length))
        .collect::<Vec<_>>()
        .join(", ");
    Err(GatewayError::FilterBlocked {
        field: field.to_string(),
        message: format!("`{field}` contains nucleotide runs at characters {spans}"),
        findings,
    })
}

fn build(id: TemplateId, values: BTreeMap<String, String>, safety: &SafetyConfig) -> Result<PromptBundle, GatewayError> {
    for (k, v) in &values {
        check(k, v, safety)?;
    }
    let filled = template::render(id.template(), |n| values.get(n).cloned())
        .map_err(|e| GatewayError::Config(format!("prompt template: {e}")))?;
    // Values are clean on their own; a run could still form across a
    // placeholder boundary.
    check("prompt", &filled, safety)?;
    Ok(PromptBundle {
        template_id: id,
        filled_text: filled,
        placeholders: values,
        filter_threshold: safety.threshold,
    })
}

pub fn build_decomposition_prompt(
    request: &str,
    table: &TaskTable,
    safety: &SafetyConfig,
) -> Result<PromptBundle, GatewayError> {
    let values = BTreeMap::from([
        ("Task Description Table".to_string(), table.describe()),
        ("user_message".to_string(), request.to_string()),
    ]);
    build(TemplateId::Decomposition, values, safety)
}

pub fn build_autopilot_prompt(
    meta_prompt: &str,
    system_message: &str,
    safety: &SafetyConfig,
) -> Result<PromptBundle, GatewayError> {
    let values = BTreeMap::from([
        ("meta_prompt".to_string(), meta_prompt.to_string()),
        ("system_message".to_string(), system_message.to_string()),
    ]);
    build(TemplateId::Autopilot, values, safety)
}

/// Grounded-answer prompt for Q&A. `context` is the already formatted list
/// of retrieved passages; long runs in it are redacted rather than blocking,
/// since the corpus is curated and not user supplied.
pub fn build_qa_prompt(question: &str, context: &str, safety: &SafetyConfig) -> Result<PromptBundle, GatewayError> {
    check("question", question, safety)?;
    let values = BTreeMap::from([
        ("question".to_string(), question.to_string()),
        ("context".to_string(), safety.redact(context)),
    ]);
    build(TemplateId::QaAnswer, values, safety)
}

/// The bundle sent for the single repair attempt after a parse failure.
/// Only the parser's own message is appended; the malformed response is not
/// echoed back.
pub fn with_repair_note(bundle: &PromptBundle, parse_error: &str) -> PromptBundle {
    let mut next = bundle.clone();
    next.filled_text = format!(
        "{}\n\nYour previous response could not be parsed ({parse_error}). \
         Reply again with only the JSON object in the response format above.",
        bundle.filled_text
    );
    next
}

/// Appended when an autopilot answer to a multiple-choice inquiry matched
/// none of the options.
pub fn with_choice_correction(bundle: &PromptBundle, invalid: &str, options: &[String]) -> PromptBundle {
    let mut next = bundle.clone();
    next.filled_text = format!(
        "{}\n\nYour previous answer \"{invalid}\" is not one of the options. \
         Answer with exactly one of: {}.",
        bundle.filled_text,
        options.join(", ")
    );
    next
}
