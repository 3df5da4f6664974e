use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::GenomicsError;

/// Which end of the protospacer the PAM sits on, read on the target strand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PamSide {
    ThreePrime,
    FivePrime,
}

/// IUPAC nucleotide code as a 4-bit mask over A, C, G, T.
fn iupac_mask(code: u8) -> Option<u8> {
    const A: u8 = 1;
    const C: u8 = 2;
    const G: u8 = 4;
    const T: u8 = 8;
    Some(match code {
        b'A' => A,
        b'C' => C,
        b'G' => G,
        b'T' | b'U' => T,
        b'R' => A | G,
        b'Y' => C | T,
        b'S' => C | G,
        b'W' => A | T,
        b'K' => G | T,
        b'M' => A | C,
        b'B' => C | G | T,
        b'D' => A | G | T,
        b'H' => A | C | T,
        b'V' => A | C | G,
        b'N' => A | C | G | T,
        _ => return None,
    })
}

fn base_mask(base: u8) -> u8 {
    match base {
        b'A' => 1,
        b'C' => 2,
        b'G' => 4,
        b'T' => 8,
        _ => 0,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PamRuleRepr", into = "PamRuleRepr")]
pub struct PamRule {
    pattern: String,
    masks: Vec<u8>,
    side: PamSide,
}

#[derive(Serialize, Deserialize)]
struct PamRuleRepr {
    pattern: String,
    side: PamSide,
}

impl TryFrom<PamRuleRepr> for PamRule {
    type Error = GenomicsError;
    fn try_from(r: PamRuleRepr) -> Result<Self, Self::Error> {
        PamRule::new(&r.pattern, r.side)
    }
}

impl From<PamRule> for PamRuleRepr {
    fn from(r: PamRule) -> Self {
        PamRuleRepr {
            pattern: r.pattern,
            side: r.side,
        }
    }
}

impl PamRule {
    pub fn new(pattern: &str, side: PamSide) -> Result<Self, GenomicsError> {
        if pattern.is_empty() {
            return Err(GenomicsError::InvalidPam(pattern.to_string()));
        }
        let upper = pattern.to_ascii_uppercase();
        let masks = upper
            .bytes()
            .map(iupac_mask)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| GenomicsError::InvalidPam(pattern.to_string()))?;
        Ok(Self {
            pattern: upper,
            masks,
            side,
        })
    }

    /// SpCas9: `NGG` 3' of the protospacer.
    pub fn cas9() -> Self {
        Self::new("NGG", PamSide::ThreePrime).expect("valid pattern")
    }

    /// AsCas12a: `TTTV` 5' of the protospacer.
    pub fn cas12a() -> Self {
        Self::new("TTTV", PamSide::FivePrime).expect("valid pattern")
    }

    /// Default side for a bare pattern: `TTTV`-like patterns are 5', the rest 3'.
    pub fn from_pattern(pattern: &str) -> Result<Self, GenomicsError> {
        let side = if pattern.to_ascii_uppercase().starts_with("TTT") {
            PamSide::FivePrime
        } else {
            PamSide::ThreePrime
        };
        Self::new(pattern, side)
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    pub fn side(&self) -> PamSide {
        self.side
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// True iff `site` (same length as the pattern, uppercase ACGT) matches.
    pub fn matches(&self, site: &[u8]) -> bool {
        site.len() == self.masks.len()
            && site
                .iter()
                .zip(&self.masks)
                .all(|(&b, &m)| base_mask(b) & m != 0)
    }
}

impl fmt::Display for PamRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.side {
            PamSide::ThreePrime => "3'",
            PamSide::FivePrime => "5'",
        };
        write!(f, "{}/{}", self.pattern, side)
    }
}

impl FromStr for PamRule {
    type Err = GenomicsError;

    /// Accepts `NGG`, `NGG/3'`, `TTTV/5'` (also `/3` and `/5`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('/') {
            None => Self::from_pattern(s.trim()),
            Some((p, side)) => {
                let side = match side.trim().trim_end_matches(['\'', '\u{2032}']) {
                    "3" => PamSide::ThreePrime,
                    "5" => PamSide::FivePrime,
                    _ => return Err(GenomicsError::InvalidPam(s.to_string())),
                };
                Self::new(p.trim(), side)
            }
        }
    }
}
