//! Nucleotide-run detection for outbound text.
//!
//! A run is a maximal stretch of `A/C/G/T/U` letters (any case). Spaces,
//! hyphens and the prime decorations `5'` / `3'` that sit *between*
//! sequence words are skipped without breaking the run, so
//! `5'-ACGT ACGT-3'` counts as one eight-nucleotide run. Offsets are
//! character indices into the original text, end-exclusive, and delimit
//! the first and last nucleotide of the run.

use serde::{Deserialize, Serialize};

/// Default minimum run length that is treated as potentially identifying.
pub const DEFAULT_THRESHOLD: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceFinding {
    pub start: usize,
    pub end: usize,
    pub length: usize,
    pub content: String,
}

fn is_nucleotide(c: char) -> bool {
    matches!(c, 'A' | 'C' | 'G' | 'T' | 'U' | 'a' | 'c' | 'g' | 't' | 'u')
}

fn is_prime_mark(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{2032}')
}

/// Width (in chars) of the separator starting at `i`, or 0 if none.
fn separator_width(chars: &[char], i: usize) -> usize {
    match chars[i] {
        ' ' | '-' => 1,
        '5' | '3' if chars.get(i + 1).copied().is_some_and(is_prime_mark) => 2,
        _ => 0,
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Case {
    Upper,
    Lower,
    Mixed,
}

fn case_of(chars: &[char]) -> Case {
    if chars.iter().all(|c| c.is_ascii_uppercase()) {
        Case::Upper
    } else if chars.iter().all(|c| c.is_ascii_lowercase()) {
        Case::Lower
    } else {
        Case::Mixed
    }
}

/// End (exclusive) of the nucleotide stretch starting at `i`.
fn stretch_end(chars: &[char], i: usize) -> usize {
    let mut j = i;
    while j < chars.len() && is_nucleotide(chars[j]) {
        j += 1;
    }
    j
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Returns every maximal run with at least `threshold` nucleotides, sorted
/// by start offset. A threshold of 0 is treated as 1.
///
/// Contiguous nucleotides always form a run. A run continues across
/// separators only between whole words of the same letter case, so
/// `ACGT ACGT` is one run while the `a` of a neighbouring prose word is not
/// pulled into an uppercase sequence.
pub fn scan_nucleotide_runs(text: &str, threshold: usize) -> Vec<SequenceFinding> {
    let threshold = threshold.max(1);
    let chars: Vec<char> = text.chars().collect();
    let mut findings = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !is_nucleotide(chars[i]) {
            i += 1;
            continue;
        }
        let start = i;
        let mut seg_start = i;
        let mut seg_end = stretch_end(&chars, i);
        let mut content: String = chars[seg_start..seg_end]
            .iter()
            .map(|c| c.to_ascii_uppercase())
            .collect();
        loop {
            let seg_is_word = (seg_start == 0 || !is_word_char(chars[seg_start - 1]))
                && (seg_end == chars.len() || !is_word_char(chars[seg_end]));
            // Skip one block of separators.
            let mut k = seg_end;
            while k < chars.len() {
                let w = separator_width(&chars, k);
                if w == 0 {
                    break;
                }
                k += w;
            }
            if !seg_is_word || k == seg_end || k >= chars.len() || !is_nucleotide(chars[k]) {
                break;
            }
            let next_end = stretch_end(&chars, k);
            let next_is_word = next_end == chars.len() || !is_word_char(chars[next_end]);
            let case = case_of(&chars[seg_start..seg_end]);
            if !next_is_word || case == Case::Mixed || case != case_of(&chars[k..next_end]) {
                break;
            }
            content.extend(chars[k..next_end].iter().map(|c| c.to_ascii_uppercase()));
            seg_start = k;
            seg_end = next_end;
        }
        let length = content.chars().count();
        if length >= threshold {
            findings.push(SequenceFinding {
                start,
                end: seg_end,
                length,
                content,
            });
        }
        i = seg_end;
    }
    findings
}

/// Placeholder substituted for removed runs. Contains no nucleotide run
/// longer than a few letters, so redaction is idempotent.
pub const REDACTION_MARK: &str = "[redacted]";

/// Replaces each finding's span with [`REDACTION_MARK`].
pub fn redact_findings(text: &str, findings: &[SequenceFinding]) -> String {
    if findings.is_empty() {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    let mut next = findings.iter().peekable();
    let mut skipping_until = None;
    for (idx, c) in text.chars().enumerate() {
        if let Some(end) = skipping_until {
            if idx < end {
                continue;
            }
            skipping_until = None;
        }
        if let Some(f) = next.peek() {
            if idx == f.start {
                out.push_str(REDACTION_MARK);
                skipping_until = Some(f.end);
                next.next();
                continue;
            }
        }
        out.push(c);
    }
    out
}

/// Scans and redacts in one pass.
pub fn redact(text: &str, threshold: usize) -> String {
    redact_findings(text, &scan_nucleotide_runs(text, threshold))
}
