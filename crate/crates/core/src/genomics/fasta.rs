use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{DnaSeq, GenomicsError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reference {
    pub id: String,
    pub sequence: DnaSeq,
}

/// Parses multi-record FASTA. Sequences are uppercased; anything other
/// than A/C/G/T is rejected with its record and position.
pub fn parse_fasta(text: &str) -> Result<Vec<Reference>, GenomicsError> {
    let mut records = Vec::new();
    let mut current: Option<(String, String, usize)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if let Some(header) = line.strip_prefix('>') {
            if let Some(rec) = current.take() {
                records.push(finish(rec)?);
            }
            let id = header.split_whitespace().next().unwrap_or("").to_string();
            if id.is_empty() {
                return Err(GenomicsError::Fasta {
                    line: line_no,
                    message: "record without an id".into(),
                });
            }
            current = Some((id, String::new(), line_no));
            continue;
        }
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(';') {
            continue;
        }
        let Some((id, seq, _)) = current.as_mut() else {
            return Err(GenomicsError::Fasta {
                line: line_no,
                message: "sequence data before the first header".into(),
            });
        };
        for c in trimmed.chars() {
            let u = c.to_ascii_uppercase();
            if !matches!(u, 'A' | 'C' | 'G' | 'T') {
                return Err(GenomicsError::Alphabet {
                    position: seq.len(),
                    symbol: c,
                    context: format!("reference {id} (line {line_no})"),
                });
            }
            seq.push(u);
        }
    }
    if let Some(rec) = current.take() {
        records.push(finish(rec)?);
    }
    Ok(records)
}

fn finish((id, seq, line): (String, String, usize)) -> Result<Reference, GenomicsError> {
    if seq.is_empty() {
        return Err(GenomicsError::Fasta {
            line,
            message: format!("record {id} has no sequence"),
        });
    }
    Ok(Reference {
        id,
        sequence: DnaSeq::from_validated(seq),
    })
}

pub fn load_fasta(path: &Path) -> Result<Vec<Reference>, GenomicsError> {
    let text = std::fs::read_to_string(path).map_err(|e| GenomicsError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_fasta(&text)
}
