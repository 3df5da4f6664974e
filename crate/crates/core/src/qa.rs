//! Q&A mode: BM25 retrieval over a small curated corpus, then a provider
//! answer restricted to the retrieved passages.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use thiserror::Error;

use crate::llm::{build_qa_prompt, complete_structured, GatewayError, ProviderConfig, SharedProvider};
use crate::safety::SafetyConfig;

pub const MAX_CHUNK_CHARS: usize = 1200;
pub const DEFAULT_TOP_K: usize = 3;
pub const K1: f64 = 1.2;
pub const B: f64 = 0.75;
pub const QA_KEYS: [&str; 2] = ["Thoughts", "Answer"];
pub const UNGROUNDED_NOTICE: &str = "No passage in the reference corpus matches this question, so no grounded answer is available.";

// Function words dropped from both documents and queries.
const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "can", "do", "does", "for", "from", "how", "i", "in", "is", "it",
    "its", "of", "on", "or", "so", "that", "the", "their", "then", "there", "these", "this", "to", "was", "what",
    "when", "where", "which", "who", "why", "will", "with",
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QaError {
    #[error("document `{0}` is empty")]
    EmptyDocument(String),
    #[error("duplicate document id `{0}`")]
    DuplicateDocument(String),
    #[error("cannot load {path}: {message}")]
    Load { path: String, message: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocChunk {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    pub title: String,
}

impl DocChunk {
    pub fn id(&self) -> String {
        format!("{}#{}", self.doc_id, self.index)
    }
}

/// Splits `text` into chunks of at most `max` characters, breaking after
/// paragraph separators (blank lines) where possible. Separators stay with
/// the preceding chunk, so the chunks concatenate back to `text`.
pub fn chunk_text(text: &str, max: usize) -> Vec<String> {
    let mut pieces: Vec<&str> = Vec::new();
    let mut rest = text;
    while let Some(pos) = rest.find("\n\n") {
        let mut end = pos + 2;
        while rest[end..].starts_with('\n') {
            end += 1;
        }
        pieces.push(&rest[..end]);
        rest = &rest[end..];
    }
    if !rest.is_empty() {
        pieces.push(rest);
    }

    let mut chunks: Vec<String> = Vec::new();
    let mut current = String::new();
    for piece in pieces {
        if current.chars().count() + piece.chars().count() <= max {
            current.push_str(piece);
            continue;
        }
        if !current.is_empty() {
            chunks.push(std::mem::take(&mut current));
        }
        if piece.chars().count() <= max {
            current.push_str(piece);
        } else {
            chunks.extend(hard_split(piece, max));
        }
    }
    if !current.is_empty() {
        chunks.push(current);
    }
    chunks
}

// An oversized paragraph is cut at the last whitespace before the limit.
fn hard_split(text: &str, max: usize) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let mut end = (start + max).min(chars.len());
        if end < chars.len() {
            if let Some(ws) = (start + 1..end).rev().find(|&i| chars[i - 1].is_whitespace()) {
                end = ws;
            }
        }
        out.push(chars[start..end].iter().collect());
        start = end;
    }
    out
}

/// Lower-cased alphanumeric words with stopwords removed.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredChunk {
    pub chunk_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Index {
    chunks: Vec<DocChunk>,
    term_freqs: Vec<BTreeMap<String, usize>>,
    lengths: Vec<usize>,
    doc_freq: BTreeMap<String, usize>,
    avg_len: f64,
}

impl Index {
    pub fn build(documents: &[Document]) -> Result<Self, QaError> {
        let mut seen = BTreeSet::new();
        let mut chunks = Vec::new();
        for d in documents {
            if d.text.trim().is_empty() {
                return Err(QaError::EmptyDocument(d.id.clone()));
            }
            if !seen.insert(d.id.as_str()) {
                return Err(QaError::DuplicateDocument(d.id.clone()));
            }
            for (index, text) in chunk_text(&d.text, MAX_CHUNK_CHARS).into_iter().enumerate() {
                chunks.push(DocChunk {
                    doc_id: d.id.clone(),
                    index,
                    text,
                    title: d.title.clone(),
                });
            }
        }
        let mut term_freqs = Vec::with_capacity(chunks.len());
        let mut lengths = Vec::with_capacity(chunks.len());
        let mut doc_freq: BTreeMap<String, usize> = BTreeMap::new();
        for c in &chunks {
            let tokens = tokenize(&c.text);
            lengths.push(tokens.len());
            let mut tf: BTreeMap<String, usize> = BTreeMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            for t in tf.keys() {
                *doc_freq.entry(t.clone()).or_default() += 1;
            }
            term_freqs.push(tf);
        }
        let avg_len = if chunks.is_empty() {
            0.0
        } else {
            lengths.iter().sum::<usize>() as f64 / chunks.len() as f64
        };
        Ok(Self {
            chunks,
            term_freqs,
            lengths,
            doc_freq,
            avg_len,
        })
    }

    pub fn chunks(&self) -> &[DocChunk] {
        &self.chunks
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn chunk(&self, id: &str) -> Option<&DocChunk> {
        self.chunks.iter().find(|c| c.id() == id)
    }

    fn idf(&self, term: &str) -> f64 {
        let n = self.chunks.len() as f64;
        let df = self.doc_freq.get(term).copied().unwrap_or(0) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// BM25 score of every chunk for `query`, in index order.
    pub fn scores(&self, query: &str) -> Vec<f64> {
        let terms = tokenize(query);
        (0..self.chunks.len())
            .map(|i| {
                let norm = K1 * (1.0 - B + B * self.lengths[i] as f64 / self.avg_len);
                terms
                    .iter()
                    .map(|t| {
                        let tf = self.term_freqs[i].get(t).copied().unwrap_or(0) as f64;
                        if tf == 0.0 {
                            0.0
                        } else {
                            self.idf(t) * tf * (K1 + 1.0) / (tf + norm)
                        }
                    })
                    .sum()
            })
            .collect()
    }

    /// Up to `k` chunks with a positive score, best first; ties go to the
    /// lower (doc id, chunk index).
    pub fn search(&self, query: &str, k: usize) -> Vec<ScoredChunk> {
        let scores = self.scores(query);
        let mut ranked: Vec<usize> = (0..self.chunks.len()).filter(|&i| scores[i] > 0.0).collect();
        ranked.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| self.chunks[a].doc_id.cmp(&self.chunks[b].doc_id))
                .then_with(|| self.chunks[a].index.cmp(&self.chunks[b].index))
        });
        ranked
            .into_iter()
            .take(k)
            .map(|i| ScoredChunk {
                chunk_id: self.chunks[i].id(),
                score: scores[i],
            })
            .collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
struct Manifest {
    #[serde(default, rename = "doc")]
    docs: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Deserialize)]
struct ManifestEntry {
    id: String,
    title: String,
    path: String,
}

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Reads `manifest.toml` in `dir` and the documents it lists (paths are
/// relative to `dir`).
pub fn load_corpus(dir: &Path) -> Result<Vec<Document>, QaError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|e| QaError::Load {
            path: p.display().to_string(),
            message: e.to_string(),
        })
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: Manifest = toml::from_str(&read(&manifest_path)?).map_err(|e| QaError::Load {
        path: manifest_path.display().to_string(),
        message: e.to_string(),
    })?;
    manifest
        .docs
        .into_iter()
        .map(|d| {
            Ok(Document {
                text: read(&dir.join(&d.path))?,
                id: d.id,
                title: d.title,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedAnswer {
    pub answer: String,
    pub citations: Vec<String>,
    pub scores: Vec<ScoredChunk>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thoughts: Option<String>,
}

impl GroundedAnswer {
    pub fn is_grounded(&self) -> bool {
        !self.citations.is_empty()
    }
}

/// Formats retrieved chunks as labelled passages for the prompt.
pub fn format_context(index: &Index, hits: &[ScoredChunk]) -> String {
    hits.iter()
        .filter_map(|h| index.chunk(&h.chunk_id))
        .map(|c| format!("[{}] {}\n{}", c.id(), c.title, c.text.trim_end()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

pub fn answer_question(
    question: &str,
    index: &Index,
    provider: &SharedProvider,
    config: &ProviderConfig,
    safety: &SafetyConfig,
    k: usize,
) -> Result<GroundedAnswer, QaError> {
    // Blocks a question carrying a sequence even when nothing is retrieved.
    build_qa_prompt(question, "", safety)?;
    let hits = index.search(question, k);
    if hits.is_empty() {
        return Ok(GroundedAnswer {
            answer: UNGROUNDED_NOTICE.to_string(),
            citations: vec![],
            scores: vec![],
            thoughts: None,
        });
    }
    let bundle = build_qa_prompt(question, &format_context(index, &hits), safety)?;
    let fields = complete_structured(&bundle, provider, config, &QA_KEYS)?;
    let answer = fields["Answer"].as_text().unwrap_or_default().to_string();
    let mut citations: Vec<String> = hits
        .iter()
        .map(|h| h.chunk_id.clone())
        .filter(|id| answer.contains(&format!("[{id}]")))
        .collect();
    if citations.is_empty() {
        citations = hits.iter().map(|h| h.chunk_id.clone()).collect();
    }
    Ok(GroundedAnswer {
        answer,
        citations,
        scores: hits,
        thoughts: fields.get("Thoughts").and_then(|v| v.as_text()).map(str::to_string),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Route {
    Qa(String),
    Workflow(String),
}

/// `Q:` (any case, after leading whitespace) sends a message to Q&A.
pub fn route_message(text: &str) -> Route {
    let trimmed = text.trim_start();
    match trimmed.get(..2) {
        Some(p) if p.eq_ignore_ascii_case("q:") => Route::Qa(trimmed[2..].trim().to_string()),
        _ => Route::Workflow(text.to_string()),
    }
}
