//! Constraint-based PCR primer design around a target span.
//!
//! Candidates are enumerated exhaustively: forward primers end at or before
//! the span start, reverse primers (reported as reverse complements) start
//! at or after the span end. Single-primer filters run first, then pairs are
//! formed under the product-size and ΔTm limits and ranked by penalty.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

use super::seq::revcomp_bytes;
use super::thermo::{gc_fraction, longest_homopolymer, wallace_tm, WALLACE_MAX_LEN};
use super::{DnaSeq, GenomicsError};

pub const MAX_PAIRS: usize = 5;
const TM_TARGET: f64 = 60.0;
const GC_TARGET: f64 = 0.5;
const PRODUCT_TARGET: f64 = 275.0;
const TM_WEIGHT: f64 = 1.0;
const PRODUCT_WEIGHT: f64 = 0.01;
const GC_WEIGHT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimerConstraints {
    pub min_length: usize,
    pub max_length: usize,
    pub min_gc: f64,
    pub max_gc: f64,
    pub min_tm: f64,
    pub max_tm: f64,
    pub max_tm_difference: f64,
    pub min_product: usize,
    pub max_product: usize,
    pub max_homopolymer: usize,
    pub require_unique: bool,
}

impl Default for PrimerConstraints {
    fn default() -> Self {
        Self {
            min_length: 18,
            max_length: 25,
            min_gc: 0.40,
            max_gc: 0.60,
            min_tm: 55.0,
            max_tm: 65.0,
            max_tm_difference: 3.0,
            min_product: 150,
            max_product: 400,
            max_homopolymer: 4,
            require_unique: true,
        }
    }
}

impl PrimerConstraints {
    pub fn validate(&self) -> Result<(), GenomicsError> {
        let bad = |m: &str| Err(GenomicsError::InvalidArgument(format!("primer constraints: {m}")));
        if self.min_length == 0 || self.min_length > self.max_length {
            return bad("length range must be non-empty and start at 1 or more");
        }
        if self.max_length > WALLACE_MAX_LEN {
            return bad("max length exceeds the Wallace-rule limit of 30");
        }
        if !(0.0..=1.0).contains(&self.min_gc) || !(0.0..=1.0).contains(&self.max_gc) || self.min_gc > self.max_gc {
            return bad("GC range must be an ordered sub-range of [0, 1]");
        }
        if self.min_tm > self.max_tm {
            return bad("Tm range must be ordered");
        }
        if self.max_tm_difference < 0.0 {
            return bad("ΔTm limit must be non-negative");
        }
        if self.min_product == 0 || self.min_product > self.max_product {
            return bad("product size range must be ordered");
        }
        if self.max_homopolymer == 0 {
            return bad("homopolymer limit must be at least 1");
        }
        Ok(())
    }
}

/// The constraint a rejected design came closest to satisfying.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimerConstraint {
    Length,
    GcContent,
    MeltingTemp,
    Homopolymer,
    Uniqueness,
    ProductSize,
    TmDifference,
}

impl fmt::Display for PrimerConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrimerConstraint::Length => "length",
            PrimerConstraint::GcContent => "gc_content",
            PrimerConstraint::MeltingTemp => "melting_temp",
            PrimerConstraint::Homopolymer => "homopolymer",
            PrimerConstraint::Uniqueness => "uniqueness",
            PrimerConstraint::ProductSize => "product_size",
            PrimerConstraint::TmDifference => "tm_difference",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimerPair {
    pub forward: String,
    pub reverse: String,
    /// Leftmost forward-strand coordinate of the forward primer.
    pub forward_start: usize,
    /// Leftmost forward-strand coordinate of the reverse primer's binding site.
    pub reverse_start: usize,
    pub forward_tm: f64,
    pub reverse_tm: f64,
    pub forward_gc: f64,
    pub reverse_gc: f64,
    pub product_size: usize,
    pub penalty: f64,
}

impl PrimerPair {
    pub fn product_range(&self) -> std::ops::Range<usize> {
        self.forward_start..self.reverse_start + self.reverse.len()
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    start: usize,
    seq: Vec<u8>,
    tm: f64,
    gc: f64,
}

fn kmer_counts<'a>(fwd: &'a [u8], rev: &'a [u8], c: &PrimerConstraints) -> HashMap<&'a [u8], u32> {
    let mut counts = HashMap::new();
    for len in c.min_length..=c.max_length {
        for seq in [fwd, rev] {
            if seq.len() < len {
                continue;
            }
            for w in seq.windows(len) {
                *counts.entry(w).or_insert(0) += 1;
            }
        }
    }
    counts
}

fn failures(
    seq: &[u8],
    c: &PrimerConstraints,
    counts: &HashMap<&[u8], u32>,
) -> (Vec<PrimerConstraint>, f64, f64) {
    let mut out = Vec::new();
    if !(c.min_length..=c.max_length).contains(&seq.len()) {
        out.push(PrimerConstraint::Length);
    }
    let gc = gc_fraction(seq);
    if gc < c.min_gc || gc > c.max_gc {
        out.push(PrimerConstraint::GcContent);
    }
    let tm = wallace_tm(seq);
    if tm < c.min_tm || tm > c.max_tm {
        out.push(PrimerConstraint::MeltingTemp);
    }
    if longest_homopolymer(seq) > c.max_homopolymer {
        out.push(PrimerConstraint::Homopolymer);
    }
    if c.require_unique && counts.get(seq).copied().unwrap_or(0) != 1 {
        out.push(PrimerConstraint::Uniqueness);
    }
    (out, tm, gc)
}

/// Picks the constraint most often responsible among the candidates that
/// fail the fewest constraints.
fn nearest_miss(rejected: &[Vec<PrimerConstraint>]) -> PrimerConstraint {
    let Some(min) = rejected.iter().map(Vec::len).min() else {
        return PrimerConstraint::Length;
    };
    let mut tally: HashMap<PrimerConstraint, usize> = HashMap::new();
    for f in rejected.iter().filter(|f| f.len() == min) {
        for c in f {
            *tally.entry(*c).or_default() += 1;
        }
    }
    tally
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(c, _)| c)
        .unwrap_or(PrimerConstraint::Length)
}

pub fn design_primers(
    reference: &DnaSeq,
    target: std::ops::Range<usize>,
    constraints: &PrimerConstraints,
) -> Result<Vec<PrimerPair>, GenomicsError> {
    constraints.validate()?;
    let n = reference.len();
    if target.start >= target.end || target.end > n {
        return Err(GenomicsError::SpanOutOfRange {
            start: target.start,
            end: target.end,
            length: n,
        });
    }
    let c = constraints;
    let no_primers = |constraint: PrimerConstraint, detail: String| GenomicsError::NoPrimersFound { constraint, detail };

    // Smallest possible product: shortest primers hugging the span.
    let tightest = target.end - target.start + 2 * c.min_length;
    if n < c.min_product || tightest > c.max_product {
        return Err(no_primers(
            PrimerConstraint::ProductSize,
            format!(
                "reference of {n} bp with target {}..{} cannot yield a product of {}-{} bp",
                target.start, target.end, c.min_product, c.max_product
            ),
        ));
    }
    if target.start < c.min_length || n - target.end < c.min_length {
        return Err(no_primers(
            PrimerConstraint::Length,
            format!("no room for a {}-nt primer on both sides of the target", c.min_length),
        ));
    }

    let fwd = reference.as_bytes();
    let rev = revcomp_bytes(fwd);
    let counts = kmer_counts(fwd, &rev, c);

    // Forward primers that could still reach a reverse primer within max_product.
    let earliest_fwd = (target.end + c.min_length).saturating_sub(c.max_product);
    let mut fwd_ok = Vec::new();
    let mut fwd_rejected = Vec::new();
    for len in c.min_length..=c.max_length {
        if len > target.start {
            break;
        }
        for start in earliest_fwd..=target.start - len {
            let seq = &fwd[start..start + len];
            let (fails, tm, gc) = failures(seq, c, &counts);
            if fails.is_empty() {
                fwd_ok.push(Candidate { start, seq: seq.to_vec(), tm, gc });
            } else {
                fwd_rejected.push(fails);
            }
        }
    }

    let latest_rev_end = (target.start - c.min_length + c.max_product).min(n);
    let mut rev_ok = Vec::new();
    let mut rev_rejected = Vec::new();
    for len in c.min_length..=c.max_length {
        if target.end + len > latest_rev_end {
            break;
        }
        for start in target.end..=latest_rev_end - len {
            // Reverse primer is the reverse complement of fwd[start..start+len].
            let rc_start = n - (start + len);
            let seq = &rev[rc_start..rc_start + len];
            let (fails, tm, gc) = failures(seq, c, &counts);
            if fails.is_empty() {
                rev_ok.push(Candidate { start, seq: seq.to_vec(), tm, gc });
            } else {
                rev_rejected.push(fails);
            }
        }
    }

    if fwd_ok.is_empty() || rev_ok.is_empty() {
        let (side, rejected) = if fwd_ok.is_empty() {
            ("forward", &fwd_rejected)
        } else {
            ("reverse", &rev_rejected)
        };
        let constraint = nearest_miss(rejected);
        return Err(no_primers(
            constraint,
            format!("no {side} primer passed; {} candidates rejected", rejected.len()),
        ));
    }

    let mut pairs = Vec::new();
    let mut product_misses = 0usize;
    let mut tm_misses = 0usize;
    for f in &fwd_ok {
        for r in &rev_ok {
            let end = r.start + r.seq.len();
            if end <= f.start {
                continue;
            }
            let product = end - f.start;
            let product_fail = product < c.min_product || product > c.max_product;
            let tm_fail = (f.tm - r.tm).abs() > c.max_tm_difference;
            match (product_fail, tm_fail) {
                (false, false) => {}
                (true, false) => {
                    product_misses += 1;
                    continue;
                }
                (false, true) => {
                    tm_misses += 1;
                    continue;
                }
                (true, true) => continue,
            }
            let penalty = TM_WEIGHT * ((f.tm - TM_TARGET).abs() + (r.tm - TM_TARGET).abs())
                + PRODUCT_WEIGHT * (product as f64 - PRODUCT_TARGET).abs()
                + GC_WEIGHT * ((f.gc - GC_TARGET).abs() + (r.gc - GC_TARGET).abs());
            pairs.push(PrimerPair {
                forward: String::from_utf8(f.seq.clone()).expect("ascii"),
                reverse: String::from_utf8(r.seq.clone()).expect("ascii"),
                forward_start: f.start,
                reverse_start: r.start,
                forward_tm: f.tm,
                reverse_tm: r.tm,
                forward_gc: f.gc,
                reverse_gc: r.gc,
                product_size: product,
                penalty,
            });
        }
    }

    if pairs.is_empty() {
        let constraint = if tm_misses > product_misses {
            PrimerConstraint::TmDifference
        } else {
            PrimerConstraint::ProductSize
        };
        return Err(no_primers(
            constraint,
            format!(
                "{} forward and {} reverse primers passed but none pair up",
                fwd_ok.len(),
                rev_ok.len()
            ),
        ));
    }

    pairs.sort_by(|a, b| {
        a.penalty
            .total_cmp(&b.penalty)
            .then(a.forward_start.cmp(&b.forward_start))
            .then(a.reverse_start.cmp(&b.reverse_start))
            .then(a.forward.len().cmp(&b.forward.len()))
            .then(a.reverse.len().cmp(&b.reverse.len()))
    });
    pairs.truncate(MAX_PAIRS);
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Deterministic pseudo-random balanced sequence (xorshift).
    fn balanced(len: usize, mut state: u64) -> DnaSeq {
        let mut s = String::with_capacity(len);
        while s.len() < len {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            s.push(b"ACGT"[(state % 4) as usize] as char);
        }
        DnaSeq::new(&s).unwrap()
    }

    #[test]
    fn defaults_are_valid() {
        PrimerConstraints::default().validate().unwrap();
        let bad = PrimerConstraints {
            min_gc: 0.7,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn designs_pairs_flanking_the_span() {
        let reference = balanced(600, 0x9E3779B97F4A7C15);
        let pairs = design_primers(&reference, 280..320, &PrimerConstraints::default()).unwrap();
        assert!(!pairs.is_empty() && pairs.len() <= MAX_PAIRS);
        for p in &pairs {
            assert!(p.forward_start + p.forward.len() <= 280);
            assert!(p.reverse_start >= 320);
            assert!(p.product_range().contains(&280) && p.product_range().contains(&319));
        }
        assert!(pairs.windows(2).all(|w| w[0].penalty <= w[1].penalty));
    }

    #[test]
    fn span_out_of_range() {
        let reference = balanced(100, 7);
        assert!(matches!(
            design_primers(&reference, 90..120, &PrimerConstraints::default()),
            Err(GenomicsError::SpanOutOfRange { .. })
        ));
        assert!(design_primers(&reference, 50..50, &PrimerConstraints::default()).is_err());
    }

    #[test]
    fn infeasible_short_reference() {
        let reference = balanced(60, 11);
        let err = design_primers(&reference, 5..25, &PrimerConstraints::default()).unwrap_err();
        assert!(matches!(
            err,
            GenomicsError::NoPrimersFound {
                constraint: PrimerConstraint::ProductSize,
                ..
            }
        ));
    }

    #[test]
    fn nearest_miss_prefers_single_failures() {
        use PrimerConstraint::*;
        let rejected = vec![vec![GcContent, MeltingTemp], vec![Homopolymer], vec![Homopolymer], vec![Uniqueness]];
        assert_eq!(nearest_miss(&rejected), Homopolymer);
    }
}
