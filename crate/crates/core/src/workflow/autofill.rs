use std::collections::{BTreeMap, BTreeSet};

use crate::safety::OrganismTable;

/// Pulls `species` and `gene` out of a free-text request. Species come from
/// the organism synonym table; a gene is any token that exactly matches a
/// symbol in `vocabulary`. Only the first mention of each is used and
/// anything not recognised is left for the workflow to ask.
pub fn extract_fields(
    request: &str,
    organisms: &OrganismTable,
    vocabulary: &BTreeSet<String>,
) -> BTreeMap<&'static str, String> {
    let mut out = BTreeMap::new();
    if let Some(species) = organisms.canonical(request) {
        out.insert("species", species.to_string());
    }
    let gene = request
        .split(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
        .map(|t| t.trim_matches('-'))
        .find(|t| !t.is_empty() && vocabulary.contains(*t));
    if let Some(g) = gene {
        out.insert("gene", g.to_string());
    }
    out
}
