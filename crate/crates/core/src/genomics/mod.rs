//! Guide libraries, off-target scanning and primer design.

mod fasta;
mod library;
mod offtarget;
mod pam;
mod primers;
mod seq;
mod thermo;

pub use fasta::{load_fasta, parse_fasta, Reference};
pub use library::{
    lookup_guides, GroupKey, GuideLibrary, GuideLookup, GuideQuery, GuideRecord, Modality,
    LIBRARY_HEADER, SPACER_LEN,
};
pub use offtarget::{off_target_search, OffTargetHit, OffTargetReport, Strand, MAX_MISMATCHES};
pub use pam::{PamRule, PamSide};
pub use primers::{design_primers, PrimerConstraint, PrimerConstraints, PrimerPair, MAX_PAIRS};
pub use seq::{reverse_complement, DnaSeq};
pub use thermo::{gc_content, longest_homopolymer, melting_temp, WALLACE_MAX_LEN};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenomicsError {
    #[error("invalid symbol {symbol:?} at position {position} in {context}")]
    Alphabet {
        position: usize,
        symbol: char,
        context: String,
    },
    #[error("library line {line}: invalid symbol {symbol:?} at spacer position {position}")]
    LibraryAlphabet {
        line: usize,
        position: usize,
        symbol: char,
    },
    #[error("library line {line}: {message}")]
    LibraryParse { line: usize, message: String },
    #[error("library line {line}: duplicate spacer {spacer} in its group")]
    DuplicateGuide { line: usize, spacer: String },
    #[error("ranks in group {group} are not contiguous from 1")]
    RankGap { group: String },
    #[error("no guides for {gene} in {species} ({modality})")]
    GeneNotFound {
        species: String,
        gene: String,
        modality: Modality,
    },
    #[error("unknown modality `{0}`")]
    UnknownModality(String),
    #[error("invalid PAM pattern `{0}`")]
    InvalidPam(String),
    #[error("FASTA line {line}: {message}")]
    Fasta { line: usize, message: String },
    #[error("sequence of {length} nt exceeds the Wallace-rule limit of {max}")]
    TooLongForWallace { length: usize, max: usize },
    #[error("target span {start}..{end} is outside the {length}-bp reference")]
    SpanOutOfRange {
        start: usize,
        end: usize,
        length: usize,
    },
    #[error("no primer pairs found (nearest miss: {constraint}): {detail}")]
    NoPrimersFound {
        constraint: PrimerConstraint,
        detail: String,
    },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}
