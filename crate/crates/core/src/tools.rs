//! Tools that workflow states bind to: guide lookup, off-target scan,
//! primer design and protocol retrieval over loaded fixture data.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

use crate::genomics::{
    design_primers, lookup_guides, off_target_search, DnaSeq, GenomicsError, GuideLibrary, GuideQuery, Modality,
    PamRule, PrimerConstraints, Reference,
};

pub const GUIDE_DESIGN_TOOL: &str = "lookup_guides";
pub const TOOL_NAMES: [&str; 4] = [GUIDE_DESIGN_TOOL, "off_target_scan", "protocol_lookup", "design_primers"];

pub const DEFAULT_GUIDE_COUNT: usize = 4;
pub const DEFAULT_MAX_MISMATCHES: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ToolError {
    #[error(transparent)]
    Genomics(#[from] GenomicsError),
    #[error("missing tool argument `{0}`")]
    MissingArgument(String),
    #[error("invalid tool argument `{name}`: {message}")]
    InvalidArgument { name: String, message: String },
    #[error("{0}")]
    NotFound(String),
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("cannot load {path}: {message}")]
    Load { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocol {
    pub id: String,
    pub title: String,
    pub modality: String,
    /// Delivery keywords this protocol applies to; `*` matches any.
    pub delivery: Vec<String>,
    /// Nuclease or editor names; `*` matches any.
    pub systems: Vec<String>,
    pub reference: String,
    #[serde(default)]
    pub steps: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolTable {
    #[serde(default, rename = "protocol")]
    pub protocols: Vec<Protocol>,
}

fn keyword_match(keys: &[String], value: &str) -> Option<u8> {
    let value = value.to_lowercase();
    if keys.iter().any(|k| k != "*" && value.contains(&k.to_lowercase())) {
        Some(2)
    } else if keys.iter().any(|k| k == "*") {
        Some(1)
    } else {
        None
    }
}

impl ProtocolTable {
    pub fn parse_toml(text: &str) -> Result<Self, ToolError> {
        toml::from_str(text).map_err(|e| ToolError::Load {
            path: "protocols".into(),
            message: e.to_string(),
        })
    }

    /// Best protocol for the modality: specific delivery and system matches
    /// beat wildcards; ties go to the first listed.
    pub fn find(&self, modality: &str, system: &str, delivery: &str) -> Option<&Protocol> {
        self.protocols
            .iter()
            .filter(|p| p.modality.eq_ignore_ascii_case(modality))
            .filter_map(|p| Some((keyword_match(&p.delivery, delivery)? * 3 + keyword_match(&p.systems, system)?, p)))
            .fold(None, |best: Option<(u8, &Protocol)>, (score, p)| match best {
                Some((b, _)) if b >= score => best,
                _ => Some((score, p)),
            })
            .map(|(_, p)| p)
    }
}

/// PAM pattern implied by a nuclease name, if it is one we know.
pub fn pam_for_system(system: &str) -> Option<PamRule> {
    let s = system.to_ascii_lowercase();
    if s.contains("cas12a") || s.contains("cpf1") {
        Some(PamRule::cas12a())
    } else if s.contains("cas9") {
        Some(PamRule::cas9())
    } else {
        None
    }
}

/// Data the tools operate on.
#[derive(Debug, Clone, Default)]
pub struct ToolProvider {
    pub library: GuideLibrary,
    /// Sequences scanned for off-target sites.
    pub genome: Vec<Reference>,
    /// Per-gene loci used as primer-design templates, keyed by upper-case symbol.
    pub loci: BTreeMap<String, Reference>,
    pub protocols: ProtocolTable,
    pub primer_constraints: PrimerConstraints,
}

type Args = BTreeMap<String, Value>;

fn text<'a>(args: &'a Args, name: &str) -> Result<&'a str, ToolError> {
    opt_text(args, name)?.ok_or_else(|| ToolError::MissingArgument(name.to_string()))
}

fn opt_text<'a>(args: &'a Args, name: &str) -> Result<Option<&'a str>, ToolError> {
    match args.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(ToolError::InvalidArgument {
            name: name.into(),
            message: "expected text".into(),
        }),
    }
}

fn count(args: &Args, name: &str, default: usize) -> Result<usize, ToolError> {
    match args.get(name) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v.as_u64().map(|n| n as usize).ok_or_else(|| ToolError::InvalidArgument {
            name: name.into(),
            message: "expected a non-negative integer".into(),
        }),
    }
}

/// Spacers of a guide list artifact (objects with a `spacer` field).
fn spacers(v: &Value) -> Vec<String> {
    v.as_array()
        .map(|items| {
            items
                .iter()
                .filter_map(|g| g.get("spacer").and_then(Value::as_str).map(str::to_string))
                .collect()
        })
        .unwrap_or_default()
}

impl ToolProvider {
    pub fn with_loci(mut self, loci: Vec<Reference>) -> Self {
        self.loci = loci.into_iter().map(|r| (r.id.to_ascii_uppercase(), r)).collect();
        self
    }

    pub fn load_protocols(path: &Path) -> Result<ProtocolTable, ToolError> {
        let text = std::fs::read_to_string(path).map_err(|e| ToolError::Load {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        ProtocolTable::parse_toml(&text)
    }

    pub fn run(&self, name: &str, args: &Args) -> Result<Value, ToolError> {
        match name {
            "lookup_guides" => self.lookup(args),
            "off_target_scan" => self.off_target(args),
            "protocol_lookup" => self.protocol(args),
            "design_primers" => self.primers(args),
            other => Err(ToolError::UnknownTool(other.to_string())),
        }
    }

    fn lookup(&self, args: &Args) -> Result<Value, ToolError> {
        let modality: Modality = text(args, "modality")?.parse()?;
        let mut query = GuideQuery::new(text(args, "species")?, text(args, "gene")?, modality);
        if let Some(pam) = opt_text(args, "system")?.and_then(pam_for_system) {
            query = query.with_pam(pam.pattern());
        }
        let n = count(args, "n", DEFAULT_GUIDE_COUNT)?;
        let found = lookup_guides(&self.library, &query, n)?;
        Ok(serde_json::to_value(found.guides).expect("guide records serialize"))
    }

    fn off_target(&self, args: &Args) -> Result<Value, ToolError> {
        let mut queries = Vec::new();
        if let Some(seq) = opt_text(args, "sequence")? {
            queries.push(seq.to_string());
        } else if let Some(g) = args.get("guides") {
            queries = spacers(g);
        }
        if queries.is_empty() {
            return Err(ToolError::MissingArgument("sequence or guides".into()));
        }
        let rule = opt_text(args, "system")?.and_then(pam_for_system).unwrap_or_else(PamRule::cas9);
        let k = count(args, "max_mismatches", DEFAULT_MAX_MISMATCHES)?;
        let mut reports = Vec::new();
        for q in &queries {
            let report = off_target_search(q, &self.genome, k, &rule)?;
            let mut v = serde_json::to_value(&report).expect("reports serialize");
            v["mismatch_histogram"] = json!(report.mismatch_histogram());
            reports.push(v);
        }
        Ok(Value::Array(reports))
    }

    fn protocol(&self, args: &Args) -> Result<Value, ToolError> {
        let modality = text(args, "modality")?;
        let system = opt_text(args, "system")?.unwrap_or("");
        let delivery = opt_text(args, "delivery")?.unwrap_or("");
        let p = self
            .protocols
            .find(modality, system, delivery)
            .ok_or_else(|| ToolError::NotFound(format!("no protocol for {modality} with {delivery}")))?;
        Ok(serde_json::to_value(p).expect("protocols serialize"))
    }

    fn primers(&self, args: &Args) -> Result<Value, ToolError> {
        let (ref_id, reference) = match opt_text(args, "reference")? {
            Some(pasted) => {
                let cleaned: String = pasted.chars().filter(|c| !c.is_whitespace()).collect();
                ("pasted".to_string(), DnaSeq::new(&cleaned)?)
            }
            None => {
                let gene = text(args, "gene")?;
                let r = self
                    .loci
                    .get(&gene.to_ascii_uppercase())
                    .ok_or_else(|| ToolError::NotFound(format!("no reference locus loaded for {gene}")))?;
                (r.id.clone(), r.sequence.clone())
            }
        };
        let target = args
            .get("guides")
            .map(spacers)
            .unwrap_or_default()
            .iter()
            .find_map(|s| find_site(&reference, s))
            .unwrap_or_else(|| {
                let mid = reference.len() / 2;
                mid.saturating_sub(10)..(mid + 10).min(reference.len())
            });
        let pairs = design_primers(&reference, target.clone(), &self.primer_constraints)?;
        Ok(json!({
            "reference": ref_id,
            "target": [target.start, target.end],
            "pairs": pairs,
        }))
    }
}

/// Forward-strand span of `spacer` (either orientation) in `reference`.
fn find_site(reference: &DnaSeq, spacer: &str) -> Option<std::ops::Range<usize>> {
    let s = DnaSeq::new(spacer).ok()?;
    let hay = reference.as_str();
    hay.find(s.as_str())
        .or_else(|| hay.find(s.reverse_complement().as_str()))
        .map(|p| p..p + s.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn provider() -> ToolProvider {
        let lib = "species\tgene\tmodality\tspacer\tpam\trank\tsource\n\
                   human\tEGFR\tknockout\tACGTACGTACGTACGTACGA\tNGG\t1\tt\n\
                   human\tEGFR\tknockout\tTTGCAACGTTGCAACGTTGCAAC\tTTTV\t2\tt\n";
        let protocols = r#"
[[protocol]]
id = "ko-lenti"
title = "Lentiviral knockout"
modality = "knockout"
delivery = ["lentivir"]
systems = ["*"]
reference = "ref A"

[[protocol]]
id = "ko-any"
title = "Generic knockout"
modality = "knockout"
delivery = ["*"]
systems = ["*"]
reference = "ref B"
"#;
        ToolProvider {
            library: GuideLibrary::ingest(lib).unwrap(),
            protocols: ProtocolTable::parse_toml(protocols).unwrap(),
            ..Default::default()
        }
    }

    fn args(pairs: &[(&str, Value)]) -> Args {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn lookup_filters_by_system_pam() {
        let p = provider();
        let out = p
            .run(
                "lookup_guides",
                &args(&[
                    ("species", json!("human")),
                    ("gene", json!("EGFR")),
                    ("modality", json!("knockout")),
                    ("system", json!("AsCas12a")),
                ]),
            )
            .unwrap();
        let guides = out.as_array().unwrap();
        assert_eq!(guides.len(), 1);
        assert_eq!(guides[0]["pam"], "TTTV");
    }

    #[test]
    fn protocol_prefers_specific_delivery() {
        let p = provider();
        let a = args(&[("modality", json!("knockout")), ("delivery", json!("Lentiviral transduction"))]);
        assert_eq!(p.run("protocol_lookup", &a).unwrap()["id"], "ko-lenti");
        let b = args(&[("modality", json!("knockout")), ("delivery", json!("Electroporation"))]);
        assert_eq!(p.run("protocol_lookup", &b).unwrap()["id"], "ko-any");
        let c = args(&[("modality", json!("activation"))]);
        assert!(matches!(p.run("protocol_lookup", &c), Err(ToolError::NotFound(_))));
    }

    #[test]
    fn missing_args_and_unknown_tool() {
        let p = provider();
        assert_eq!(
            p.run("lookup_guides", &args(&[("modality", json!("knockout"))])),
            Err(ToolError::MissingArgument("species".into()))
        );
        assert!(matches!(p.run("teleport", &Args::new()), Err(ToolError::UnknownTool(_))));
    }

    #[test]
    fn system_names_map_to_pams() {
        assert_eq!(pam_for_system("SpCas9").unwrap().pattern(), "NGG");
        assert_eq!(pam_for_system("AsCas12a").unwrap().pattern(), "TTTV");
        assert!(pam_for_system("ABE8e").is_none());
    }
}
