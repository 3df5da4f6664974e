use serde::{Deserialize, Serialize};
use std::fmt;

use super::GenomicsError;

/// An uppercase DNA sequence over `{A, C, G, T}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DnaSeq(String);

impl DnaSeq {
    /// Validates and uppercases `text`. Empty input is rejected.
    pub fn new(text: &str) -> Result<Self, GenomicsError> {
        if text.is_empty() {
            return Err(GenomicsError::Alphabet {
                position: 0,
                symbol: ' ',
                context: "empty sequence".into(),
            });
        }
        let mut out = String::with_capacity(text.len());
        for (position, c) in text.chars().enumerate() {
            let u = c.to_ascii_uppercase();
            if !matches!(u, 'A' | 'C' | 'G' | 'T') {
                return Err(GenomicsError::Alphabet {
                    position,
                    symbol: c,
                    context: "sequence".into(),
                });
            }
            out.push(u);
        }
        Ok(Self(out))
    }

    pub(crate) fn from_validated(text: String) -> Self {
        debug_assert!(text.bytes().all(|b| matches!(b, b'A' | b'C' | b'G' | b'T')));
        Self(text)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reverse_complement(&self) -> DnaSeq {
        DnaSeq(String::from_utf8(revcomp_bytes(self.as_bytes())).expect("ascii"))
    }

    pub fn slice(&self, start: usize, end: usize) -> DnaSeq {
        DnaSeq(self.0[start..end].to_string())
    }
}

impl fmt::Display for DnaSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for DnaSeq {
    type Error = GenomicsError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        DnaSeq::new(&value)
    }
}

impl From<DnaSeq> for String {
    fn from(value: DnaSeq) -> Self {
        value.0
    }
}

pub(crate) fn complement(b: u8) -> u8 {
    match b {
        b'A' => b'T',
        b'T' => b'A',
        b'C' => b'G',
        b'G' => b'C',
        other => other,
    }
}

pub(crate) fn revcomp_bytes(seq: &[u8]) -> Vec<u8> {
    seq.iter().rev().map(|&b| complement(b)).collect()
}

/// Watson-Crick reverse complement of a `{A,C,G,T}` string.
pub fn reverse_complement(sequence: &str) -> Result<String, GenomicsError> {
    Ok(DnaSeq::new(sequence)?.reverse_complement().0)
}
