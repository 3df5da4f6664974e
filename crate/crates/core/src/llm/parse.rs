//! Extraction of the JSON object an LLM was asked to produce.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldValue {
    Text(String),
    List(Vec<String>),
}

impl FieldValue {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            FieldValue::Text(s) => Some(s),
            FieldValue::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[String]> {
        match self {
            FieldValue::List(v) => Some(v),
            FieldValue::Text(_) => None,
        }
    }
}

pub type FieldMap = BTreeMap<String, FieldValue>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("no JSON object found in the response")]
    NoObjectFound,
    #[error("response is missing the required key `{0}`")]
    MissingKey(String),
    #[error("key `{0}` must be a string or a list of strings")]
    WrongValueShape(String),
}

/// Finds the first JSON object in `raw` (prose, code fences and doubled
/// braces around it are ignored) and checks that every key in `required`
/// maps to a string or a list of strings. Extra keys are kept when they
/// have an acceptable shape and dropped otherwise.
pub fn parse_structured(raw: &str, required: &[&str]) -> Result<FieldMap, ParseError> {
    let object = first_object(raw).ok_or(ParseError::NoObjectFound)?;
    let mut out = FieldMap::new();
    for key in required {
        let v = object
            .get(*key)
            .ok_or_else(|| ParseError::MissingKey((*key).to_string()))?;
        out.insert((*key).to_string(), shape(v).ok_or_else(|| ParseError::WrongValueShape((*key).to_string()))?);
    }
    for (k, v) in &object {
        if !out.contains_key(k) {
            if let Some(fv) = shape(v) {
                out.insert(k.clone(), fv);
            }
        }
    }
    Ok(out)
}

fn shape(v: &Value) -> Option<FieldValue> {
    match v {
        Value::String(s) => Some(FieldValue::Text(s.clone())),
        Value::Array(items) => items
            .iter()
            .map(|i| i.as_str().map(str::to_string))
            .collect::<Option<Vec<_>>>()
            .map(FieldValue::List),
        _ => None,
    }
}

fn first_object(raw: &str) -> Option<serde_json::Map<String, Value>> {
    for (i, _) in raw.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            return Some(map);
        }
    }
    None
}

/// Inverse of [`parse_structured`] for well-formed maps.
pub fn serialize_structured(fields: &FieldMap) -> String {
    serde_json::to_string(fields).expect("field maps always serialize")
}
