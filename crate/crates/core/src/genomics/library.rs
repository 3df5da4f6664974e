//! Pre-designed guide libraries.
//!
//! Libraries are tab-separated files with the columns `species`, `gene`,
//! `modality`, `spacer`, `pam`, `rank` and `source`. Records are grouped by
//! `(species, gene, modality)`; ranks inside a group must be exactly `1..=n`.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::{DnaSeq, GenomicsError};

pub const LIBRARY_HEADER: [&str; 7] = ["species", "gene", "modality", "spacer", "pam", "rank", "source"];
pub const SPACER_LEN: std::ops::RangeInclusive<usize> = 18..=25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Knockout,
    Activation,
    Interference,
    BaseEditing,
    PrimeEditing,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Knockout => "knockout",
            Modality::Activation => "activation",
            Modality::Interference => "interference",
            Modality::BaseEditing => "base_editing",
            Modality::PrimeEditing => "prime_editing",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = GenomicsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "knockout" => Modality::Knockout,
            "activation" | "crispra" => Modality::Activation,
            "interference" | "crispri" => Modality::Interference,
            "base_editing" => Modality::BaseEditing,
            "prime_editing" => Modality::PrimeEditing,
            other => return Err(GenomicsError::UnknownModality(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuideRecord {
    pub species: String,
    pub gene: String,
    pub modality: Modality,
    pub spacer: DnaSeq,
    pub pam: String,
    pub rank: u32,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub species: String,
    pub gene: String,
    pub modality: Modality,
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.species, self.gene, self.modality)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuideLibrary {
    groups: BTreeMap<GroupKey, Vec<GuideRecord>>,
}

impl GuideLibrary {
    pub fn ingest(document: &str) -> Result<Self, GenomicsError> {
        let mut lines = document.lines().enumerate();
        let header = loop {
            match lines.next() {
                None => return Ok(Self::default()),
                Some((_, l)) if l.trim().is_empty() => continue,
                Some((i, l)) => break (i + 1, l.trim_end_matches('\r')),
            };
        };
        let cols: Vec<&str> = header.1.split('\t').map(str::trim).collect();
        if cols != LIBRARY_HEADER {
            return Err(GenomicsError::LibraryParse {
                line: header.0,
                message: format!("expected header `{}`", LIBRARY_HEADER.join("\\t")),
            });
        }

        let mut groups: BTreeMap<GroupKey, Vec<GuideRecord>> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            let raw = raw.trim_end_matches('\r');
            if raw.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if fields.len() != LIBRARY_HEADER.len() {
                return Err(GenomicsError::LibraryParse {
                    line,
                    message: format!("expected {} columns, found {}", LIBRARY_HEADER.len(), fields.len()),
                });
            }
            let modality: Modality = fields[2].parse().map_err(|e: GenomicsError| {
                GenomicsError::LibraryParse {
                    line,
                    message: e.to_string(),
                }
            })?;
            let spacer = DnaSeq::new(fields[3]).map_err(|e| match e {
                GenomicsError::Alphabet { position, symbol, .. } => GenomicsError::LibraryAlphabet {
                    line,
                    position,
                    symbol,
                },
                other => other,
            })?;
            if !SPACER_LEN.contains(&spacer.len()) {
                return Err(GenomicsError::LibraryParse {
                    line,
                    message: format!("spacer length {} outside 18..=25", spacer.len()),
                });
            }
            let rank: u32 = fields[5].parse().ok().filter(|r| *r >= 1).ok_or_else(|| {
                GenomicsError::LibraryParse {
                    line,
                    message: format!("rank `{}` is not a positive integer", fields[5]),
                }
            })?;
            let species = fields[0].to_ascii_lowercase();
            let gene = fields[1].to_string();
            if species.is_empty() || gene.is_empty() {
                return Err(GenomicsError::LibraryParse {
                    line,
                    message: "species and gene are required".into(),
                });
            }
            if !seen.insert((species.clone(), gene.clone(), modality, spacer.clone())) {
                return Err(GenomicsError::DuplicateGuide {
                    line,
                    spacer: spacer.to_string(),
                });
            }
            let key = GroupKey {
                species: species.clone(),
                gene: gene.clone(),
                modality,
            };
            groups.entry(key).or_default().push(GuideRecord {
                species,
                gene,
                modality,
                spacer,
                pam: fields[4].to_ascii_uppercase(),
                rank,
                source: fields[6].to_string(),
            });
        }

        for (key, records) in groups.iter_mut() {
            records.sort_by_key(|r| r.rank);
            let contiguous = records
                .iter()
                .enumerate()
                .all(|(i, r)| r.rank as usize == i + 1);
            if !contiguous {
                return Err(GenomicsError::RankGap {
                    group: key.to_string(),
                });
            }
        }
        Ok(Self { groups })
    }

    pub fn load(path: &Path) -> Result<Self, GenomicsError> {
        let text = std::fs::read_to_string(path).map_err(|e| GenomicsError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::ingest(&text)
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn record_count(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn groups(&self) -> impl Iterator<Item = (&GroupKey, &[GuideRecord])> {
        self.groups.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// Gene symbols present anywhere in the library.
    pub fn gene_symbols(&self) -> BTreeSet<&str> {
        self.groups.keys().map(|k| k.gene.as_str()).collect()
    }

    pub fn lookup(&self, query: &GuideQuery, n: usize) -> Result<GuideLookup, GenomicsError> {
        lookup_guides(self, query, n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuideQuery {
    pub species: String,
    pub gene: String,
    pub modality: Modality,
    /// Restrict to guides whose PAM column equals this pattern.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pam: Option<String>,
}

impl GuideQuery {
    pub fn new(species: &str, gene: &str, modality: Modality) -> Self {
        Self {
            species: species.to_string(),
            gene: gene.to_string(),
            modality,
            pam: None,
        }
    }

    pub fn with_pam(mut self, pam: &str) -> Self {
        self.pam = Some(pam.to_ascii_uppercase());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuideLookup {
    pub guides: Vec<GuideRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shortfall: Option<String>,
}

/// Top-`n` guides by rank. Gene symbols match case-insensitively.
pub fn lookup_guides(
    library: &GuideLibrary,
    query: &GuideQuery,
    n: usize,
) -> Result<GuideLookup, GenomicsError> {
    if n == 0 {
        return Err(GenomicsError::InvalidArgument("n must be at least 1".into()));
    }
    let species = query.species.to_ascii_lowercase();
    let not_found = || GenomicsError::GeneNotFound {
        species: query.species.clone(),
        gene: query.gene.clone(),
        modality: query.modality,
    };
    let (_, records) = library
        .groups
        .iter()
        .find(|(k, _)| {
            k.species == species && k.modality == query.modality && k.gene.eq_ignore_ascii_case(&query.gene)
        })
        .ok_or_else(not_found)?;
    let candidates: Vec<&GuideRecord> = records
        .iter()
        .filter(|r| query.pam.as_deref().is_none_or(|p| r.pam == p))
        .collect();
    if candidates.is_empty() {
        return Err(not_found());
    }
    let guides: Vec<GuideRecord> = candidates.iter().take(n).map(|r| (*r).clone()).collect();
    let shortfall = (guides.len() < n).then(|| {
        format!(
            "only {} guide(s) available for {} {} ({}); requested {}",
            guides.len(),
            query.species,
            query.gene,
            query.modality,
            n
        )
    });
    Ok(GuideLookup { guides, shortfall })
}
