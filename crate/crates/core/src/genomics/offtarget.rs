//! PAM-aware mismatch scanning of references on both strands.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::seq::revcomp_bytes;
use super::{DnaSeq, GenomicsError, PamRule, PamSide, Reference};

pub const MAX_MISMATCHES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strand {
    #[serde(rename = "+")]
    Forward,
    #[serde(rename = "-")]
    Reverse,
}

impl Strand {
    pub fn symbol(self) -> char {
        match self {
            Strand::Forward => '+',
            Strand::Reverse => '-',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffTargetHit {
    pub reference: String,
    /// 0-based leftmost forward-strand coordinate of the protospacer.
    pub start: usize,
    pub strand: Strand,
    pub mismatches: usize,
    /// Protospacer read 5'→3' on the hit strand (same orientation as the spacer).
    pub protospacer: String,
    pub pam: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffTargetReport {
    pub spacer: String,
    pub pam_rule: PamRule,
    pub max_mismatches: usize,
    pub hits: Vec<OffTargetHit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notices: Vec<String>,
}

impl OffTargetReport {
    /// Number of hits with exactly `k` mismatches, for `k` in `0..=max_mismatches`.
    pub fn mismatch_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.max_mismatches + 1];
        for h in &self.hits {
            counts[h.mismatches] += 1;
        }
        counts
    }
}

pub fn off_target_search(
    spacer: &str,
    references: &[Reference],
    max_mismatches: usize,
    pam_rule: &PamRule,
) -> Result<OffTargetReport, GenomicsError> {
    let spacer = DnaSeq::new(spacer)?;
    if !super::library::SPACER_LEN.contains(&spacer.len()) {
        return Err(GenomicsError::InvalidArgument(format!(
            "spacer length {} outside 18..=25",
            spacer.len()
        )));
    }
    if max_mismatches > MAX_MISMATCHES {
        return Err(GenomicsError::InvalidArgument(format!(
            "max_mismatches {max_mismatches} exceeds {MAX_MISMATCHES}"
        )));
    }
    let window = spacer.len() + pam_rule.len();

    let per_ref: Vec<Result<Vec<OffTargetHit>, String>> = references
        .par_iter()
        .map(|r| {
            if window > r.sequence.len() {
                return Err(format!(
                    "reference {} ({} bp) is shorter than the {}-bp search window; skipped",
                    r.id,
                    r.sequence.len(),
                    window
                ));
            }
            Ok(scan_reference(r, spacer.as_bytes(), max_mismatches, pam_rule))
        })
        .collect();

    let mut hits = Vec::new();
    let mut notices = Vec::new();
    for res in per_ref {
        match res {
            Ok(h) => hits.extend(h),
            Err(n) => notices.push(n),
        }
    }
    Ok(OffTargetReport {
        spacer: spacer.to_string(),
        pam_rule: pam_rule.clone(),
        max_mismatches,
        hits,
        notices,
    })
}

fn scan_reference(
    reference: &Reference,
    spacer: &[u8],
    max_mismatches: usize,
    rule: &PamRule,
) -> Vec<OffTargetHit> {
    let fwd = reference.sequence.as_bytes();
    let rev = revcomp_bytes(fwd);
    let n = fwd.len();
    let len = spacer.len();
    let mut hits = Vec::new();
    for (strand, seq) in [(Strand::Forward, fwd), (Strand::Reverse, rev.as_slice())] {
        for (pos, mismatches) in scan_strand(seq, spacer, max_mismatches, rule) {
            let start = match strand {
                Strand::Forward => pos,
                Strand::Reverse => n - (pos + len),
            };
            let pam_range = pam_range(pos, len, rule);
            hits.push(OffTargetHit {
                reference: reference.id.clone(),
                start,
                strand,
                mismatches,
                protospacer: String::from_utf8(seq[pos..pos + len].to_vec()).expect("ascii"),
                pam: String::from_utf8(seq[pam_range].to_vec()).expect("ascii"),
            });
        }
    }
    hits.sort_by_key(|h| (h.start, h.strand));
    hits
}

fn pam_range(pos: usize, len: usize, rule: &PamRule) -> std::ops::Range<usize> {
    match rule.side() {
        PamSide::ThreePrime => pos + len..pos + len + rule.len(),
        PamSide::FivePrime => pos - rule.len()..pos,
    }
}

/// Positions (on `seq`'s own coordinates) of protospacers within
/// `max_mismatches` of `spacer` with a valid PAM on the rule's side.
fn scan_strand(seq: &[u8], spacer: &[u8], max_mismatches: usize, rule: &PamRule) -> Vec<(usize, usize)> {
    let len = spacer.len();
    let p = rule.len();
    let (first, last) = match rule.side() {
        PamSide::ThreePrime => (0, seq.len().saturating_sub(len + p)),
        PamSide::FivePrime => (p, seq.len().saturating_sub(len)),
    };
    if seq.len() < len + p {
        return Vec::new();
    }
    let mut out = Vec::new();
    for pos in first..=last {
        if !rule.matches(&seq[pam_range(pos, len, rule)]) {
            continue;
        }
        if let Some(mm) = hamming_within(&seq[pos..pos + len], spacer, max_mismatches) {
            out.push((pos, mm));
        }
    }
    out
}

fn hamming_within(a: &[u8], b: &[u8], limit: usize) -> Option<usize> {
    let mut d = 0;
    for (x, y) in a.iter().zip(b) {
        if x != y {
            d += 1;
            if d > limit {
                return None;
            }
        }
    }
    Some(d)
}
