//! `{name}` placeholder templates with `{{` / `}}` escapes.
//!
//! Used both for the fixed LLM prompt formats and for state instructions.
//! Placeholder names may contain spaces (`{Task Description Table}`).

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("unresolved placeholder `{0}`")]
    Missing(String),
    #[error("unbalanced brace at byte {0}")]
    Unbalanced(usize),
}

enum Piece<'a> {
    Text(&'a str),
    Brace(char),
    Name(&'a str),
}

fn pieces(template: &str) -> Result<Vec<Piece<'_>>, TemplateError> {
    let bytes = template.as_bytes();
    let mut out = Vec::new();
    let mut lit_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' if bytes.get(i + 1) == Some(&b'{') => {
                out.push(Piece::Text(&template[lit_start..i]));
                out.push(Piece::Brace('{'));
                i += 2;
                lit_start = i;
            }
            b'}' if bytes.get(i + 1) == Some(&b'}') => {
                out.push(Piece::Text(&template[lit_start..i]));
                out.push(Piece::Brace('}'));
                i += 2;
                lit_start = i;
            }
            b'{' => {
                let close = template[i + 1..]
                    .find(['}', '{'])
                    .map(|o| o + i + 1)
                    .filter(|&c| bytes[c] == b'}')
                    .ok_or(TemplateError::Unbalanced(i))?;
                out.push(Piece::Text(&template[lit_start..i]));
                out.push(Piece::Name(&template[i + 1..close]));
                i = close + 1;
                lit_start = i;
            }
            b'}' => return Err(TemplateError::Unbalanced(i)),
            _ => i += 1,
        }
    }
    out.push(Piece::Text(&template[lit_start..]));
    Ok(out)
}

/// Placeholder names in order of appearance (duplicates kept).
pub fn placeholders(template: &str) -> Result<Vec<String>, TemplateError> {
    Ok(pieces(template)?
        .into_iter()
        .filter_map(|p| match p {
            Piece::Name(n) => Some(n.to_string()),
            _ => None,
        })
        .collect())
}

pub fn render<F>(template: &str, mut lookup: F) -> Result<String, TemplateError>
where
    F: FnMut(&str) -> Option<String>,
{
    let mut out = String::with_capacity(template.len());
    for p in pieces(template)? {
        match p {
            Piece::Text(t) => out.push_str(t),
            Piece::Brace(c) => out.push(c),
            Piece::Name(n) => out.push_str(&lookup(n).ok_or_else(|| TemplateError::Missing(n.to_string()))?),
        }
    }
    Ok(out)
}
