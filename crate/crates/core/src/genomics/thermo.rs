//! Primer thermodynamics. Melting temperature uses the Wallace rule,
//! `Tm = 2·(A+T) + 4·(G+C)`, which is only meaningful for short oligos.

use super::{DnaSeq, GenomicsError};

pub const WALLACE_MAX_LEN: usize = 30;

pub fn melting_temp(sequence: &str) -> Result<f64, GenomicsError> {
    let seq = DnaSeq::new(sequence)?;
    if seq.len() > WALLACE_MAX_LEN {
        return Err(GenomicsError::TooLongForWallace {
            length: seq.len(),
            max: WALLACE_MAX_LEN,
        });
    }
    Ok(wallace_tm(seq.as_bytes()))
}

pub fn gc_content(sequence: &str) -> Result<f64, GenomicsError> {
    let seq = DnaSeq::new(sequence)?;
    Ok(gc_fraction(seq.as_bytes()))
}

pub(crate) fn wallace_tm(seq: &[u8]) -> f64 {
    let gc = gc_count(seq);
    let at = seq.len() - gc;
    (2 * at + 4 * gc) as f64
}

pub(crate) fn gc_fraction(seq: &[u8]) -> f64 {
    gc_count(seq) as f64 / seq.len() as f64
}

fn gc_count(seq: &[u8]) -> usize {
    seq.iter().filter(|&&b| b == b'G' || b == b'C').count()
}

/// Length of the longest single-base run.
pub fn longest_homopolymer(seq: &[u8]) -> usize {
    let mut best = 0;
    let mut run = 0;
    let mut prev = None;
    for &b in seq {
        if Some(b) == prev {
            run += 1;
        } else {
            run = 1;
            prev = Some(b);
        }
        best = best.max(run);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genomics::reverse_complement;
    use proptest::prelude::*;

    #[test]
    fn wallace_examples() {
        assert_eq!(melting_temp("AAAAAAAAAA").unwrap(), 20.0);
        assert_eq!(melting_temp("GGGGGCCCCC").unwrap(), 40.0);
        // 10 A/T + 10 G/C = 20 + 40
        assert_eq!(melting_temp("ACGTACGTACGTACGTACGT").unwrap(), 60.0);
    }

    #[test]
    fn gc_extremes() {
        assert_eq!(gc_content("GGCC").unwrap(), 1.0);
        assert_eq!(gc_content("ATAT").unwrap(), 0.0);
        assert_eq!(gc_content("ACGT").unwrap(), 0.5);
    }

    #[test]
    fn too_long_for_wallace() {
        let s = "A".repeat(31);
        assert!(matches!(
            melting_temp(&s),
            Err(GenomicsError::TooLongForWallace { length: 31, .. })
        ));
        assert!(melting_temp(&"A".repeat(30)).is_ok());
    }

    #[test]
    fn alphabet_errors() {
        assert!(melting_temp("ACGN").is_err());
        assert!(gc_content("").is_err());
    }

    #[test]
    fn homopolymer_runs() {
        assert_eq!(longest_homopolymer(b"ACGT"), 1);
        assert_eq!(longest_homopolymer(b"AAAACGGGGGT"), 5);
        assert_eq!(longest_homopolymer(b""), 0);
    }

    proptest! {
        #[test]
        fn gc_preserved_by_reverse_complement(s in "[ACGT]{1,100}") {
            let rc = reverse_complement(&s).unwrap();
            prop_assert_eq!(gc_content(&s).unwrap(), gc_content(&rc).unwrap());
        }
    }
}
