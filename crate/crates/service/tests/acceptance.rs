//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Every quantitative check runs against an oracle
//! written here, not against the code under test.

mod common;

use common::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crispr_agent::autopilot::{run_autopilot, DecisionKind, HandoffReason, Termination};
use crispr_agent::genomics::{
    design_primers, off_target_search, DnaSeq, GenomicsError, PamRule, PrimerConstraints, PrimerPair, Reference,
    Strand,
};
use crispr_agent::llm::{AuditingProvider, ProviderConfig, Script, ScriptEntry, ScriptedProvider, SharedProvider};
use crispr_agent::planner::{decompose, meta_pipeline, validate_plan, MetaTask};
use crispr_agent::safety::scan_nucleotide_runs;
use crispr_agent::workflow::{
    gate_violations, Engine, EngineError, Mode, Responder, SafetyTag, Session, Status, TurnInput, Validator,
    WorkflowDef, WorkflowRegistry, END,
};
use crispr_agent_service::store::SessionStore;

type Check = Result<String, String>;
type Criterion = (&'static str, &'static str, fn(&mut Ctx) -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

#[derive(Default)]
struct Ctx {
    auditors: Vec<Arc<AuditingProvider>>,
}

impl Ctx {
    fn audited(&mut self, script: Script) -> SharedProvider {
        let inner: SharedProvider = Arc::new(ScriptedProvider::new(script));
        let audit = Arc::new(AuditingProvider::with_threshold(inner, 20));
        self.auditors.push(Arc::clone(&audit));
        audit
    }
}

fn cfg() -> ProviderConfig {
    ProviderConfig::default()
}

fn revcomp(s: &[u8]) -> Vec<u8> {
    s.iter()
        .rev()
        .map(|b| match b {
            b'A' => b'T',
            b'T' => b'A',
            b'C' => b'G',
            b'G' => b'C',
            _ => b'N',
        })
        .collect()
}

fn random_dna(rng: &mut impl Rng, n: usize, gc: f64) -> String {
    (0..n)
        .map(|_| {
            let strong = rng.random_bool(gc);
            match (strong, rng.random_bool(0.5)) {
                (true, true) => 'G',
                (true, false) => 'C',
                (false, true) => 'A',
                (false, false) => 'T',
            }
        })
        .collect()
}

// ---------------------------------------------------------------- planner

fn planner_demo(ctx: &mut Ctx) -> Check {
    let provider = ctx.audited(script("decompose_demo"));
    let t = Instant::now();
    let plan = decompose(
        "design sgRNA to knockout human EGFR",
        fixtures().registry.task_table(),
        &provider,
        &cfg(),
        &fixtures().safety,
    )
    .map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let want = ["knockout.StateStep1", "knockout.StateStep3"];
    ensure(plan.tasks == want, || format!("got {:?}", plan.tasks))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("{:?} in {:.1} ms", plan.tasks, elapsed.as_secs_f64() * 1e3))
}

/// Task dependencies read straight from the workflow documents.
fn declared_deps() -> BTreeMap<String, Vec<String>> {
    fn walk(dir: &Path, out: &mut BTreeMap<String, Vec<String>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, out);
            } else if p.extension().is_some_and(|x| x == "toml") && p.file_name().is_some_and(|n| n != "catalog.toml") {
                let def = WorkflowDef::parse_toml(&p.display().to_string(), &std::fs::read_to_string(&p).unwrap()).unwrap();
                out.insert(def.task_name, def.depends_on);
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(&fixture_dir().join("workflows"), &mut out);
    out
}

fn closure(tasks: &[String], deps: &BTreeMap<String, Vec<String>>) -> BTreeSet<String> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<String> = tasks.to_vec();
    while let Some(t) = stack.pop() {
        if seen.insert(t.clone()) {
            stack.extend(deps[&t].iter().cloned());
        }
    }
    seen
}

fn dependency_closure(_: &mut Ctx) -> Check {
    let deps = declared_deps();
    let names: Vec<String> = deps.keys().cloned().collect();
    let table = fixtures().registry.task_table();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0002);
    let t = Instant::now();
    let (mut ok, mut idempotent) = (0, 0);
    for case in 0..500 {
        let k = rng.random_range(1..=8);
        let mut input: Vec<String> = names.choose_multiple(&mut rng, k).cloned().collect();
        input.shuffle(&mut rng);
        if rng.random_bool(0.1) {
            let dup = input[0].clone();
            input.push(dup);
        }
        let plan = validate_plan(&input, table).map_err(|e| format!("case {case}: {e}"))?;
        let out = &plan.tasks;
        let pos: HashMap<&str, usize> = out.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
        let ordered = out.iter().enumerate().all(|(i, t)| deps[t].iter().all(|d| pos.get(d.as_str()).is_some_and(|&j| j < i)));
        let unique = pos.len() == out.len();
        let exact = out.iter().cloned().collect::<BTreeSet<_>>() == closure(&input, &deps);
        ensure(ordered && unique && exact, || format!("case {case}: {input:?} -> {out:?}"))?;
        ok += 1;
        let again = validate_plan(out, table).map_err(|e| e.to_string())?;
        ensure(again.tasks == *out && again.repair_log.is_empty(), || format!("case {case}: not idempotent"))?;
        idempotent += 1;
    }
    let elapsed = t.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("{ok}/500 topologically valid, {idempotent}/500 idempotent, {:.0} ms", elapsed.as_secs_f64() * 1e3))
}

// ---------------------------------------------------------------- safety filter

/// Filler words that end in a non-nucleotide letter, so no run can form
/// across word boundaries.
const FILLER: &[&str] = &[
    "design", "primer", "screen", "human", "cells", "expression", "plasmid", "vector", "delivery", "library",
    "lentiviral", "efficiency", "protocol", "selection", "phenotype", "Western", "flow", "hypothesis", "window",
    "model", "marker", "we", "will", "then", "confirm", "knockdown", "by", "qPCR",
];

/// A run of `len` nucleotides in one of several written forms. Returns
/// the text and the byte offsets of its first and last nucleotide.
fn planted_run(rng: &mut impl Rng, len: usize) -> String {
    let bases: Vec<u8> = random_dna(rng, len, 0.5).into_bytes();
    let style = rng.random_range(0..6);
    let base = |b: u8| -> char {
        match style {
            1 => (b as char).to_ascii_lowercase(),
            5 if b == b'T' => 'U',
            _ => b as char,
        }
    };
    let group = rng.random_range(3..=10);
    let mut s = String::new();
    for (i, &b) in bases.iter().enumerate() {
        if i > 0 && i % group == 0 {
            match style {
                2 => s.push(' '),
                3 => s.push('-'),
                _ => {}
            }
        }
        s.push(base(b));
    }
    if style == 4 {
        s = format!("5'-{s}-3'");
    }
    s
}

fn filter_fuzz(_: &mut Ctx) -> Check {
    let threshold = fixtures().safety.threshold;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0003);
    let (mut pos, mut found, mut neg, mut false_pos) = (0usize, 0usize, 0usize, 0usize);
    let mut worst_per_10kb = Duration::ZERO;
    for case in 0..1000 {
        let mut text = String::new();
        let mut spans = Vec::new();
        let runs = rng.random_range(1..=3);
        let insert_at: BTreeSet<usize> = (0..runs).map(|_| rng.random_range(50..1300)).collect();
        let mut word = 0;
        while text.len() < 10_000 || spans.len() < insert_at.len() {
            if insert_at.contains(&word) && spans.len() < insert_at.len() {
                let len = rng.random_range(15..=40);
                text.push_str(": ");
                let start = text.len();
                text.push_str(&planted_run(&mut rng, len));
                spans.push((start, text.len(), len));
                text.push_str(" ; ");
            }
            text.push_str(FILLER[rng.random_range(0..FILLER.len())]);
            text.push(if rng.random_bool(0.1) { '.' } else { ' ' });
            if text.ends_with('.') {
                text.push(' ');
            }
            word += 1;
        }
        let t = Instant::now();
        let findings = scan_nucleotide_runs(&text, threshold);
        let per_10kb = t.elapsed().mul_f64(10_240.0 / text.len() as f64);
        worst_per_10kb = worst_per_10kb.max(per_10kb);

        for &(s, e, len) in &spans {
            let overlapping: Vec<_> = findings.iter().filter(|f| f.start < e && f.end > s).collect();
            if len >= threshold {
                pos += 1;
                if overlapping.iter().any(|f| f.length >= len) {
                    found += 1;
                }
            } else {
                neg += 1;
                if !overlapping.is_empty() {
                    false_pos += 1;
                }
            }
        }
        let stray = findings.iter().filter(|f| !spans.iter().any(|&(s, e, _)| f.start < e && f.end > s)).count();
        ensure(stray == 0, || format!("case {case}: {stray} findings outside planted runs"))?;
    }
    let recall = found as f64 / pos as f64;
    let fpr = false_pos as f64 / neg as f64;
    ensure(recall == 1.0, || format!("recall {recall:.4} ({found}/{pos})"))?;
    ensure(false_pos == 0, || format!("false-positive rate {fpr:.4} ({false_pos}/{neg})"))?;
    ensure(worst_per_10kb < Duration::from_millis(100), || format!("slowest {worst_per_10kb:?} per 10 kB"))?;
    Ok(format!(
        "recall 1.0 over {pos} runs >= {threshold}, 0/{neg} false positives, slowest {:.2} ms per 10 kB",
        worst_per_10kb.as_secs_f64() * 1e3
    ))
}

// ---------------------------------------------------------------- gate

/// Guide-design states reachable from the start without entering an
/// organism checkpoint, by plain breadth-first search.
fn bfs_bypasses(def: &WorkflowDef) -> Vec<String> {
    let by_id: HashMap<&str, _> = def.states.iter().map(|s| (s.id.as_str(), s)).collect();
    let start = def.start.clone().unwrap_or_else(|| def.states[0].id.clone());
    let mut queue = VecDeque::from([start]);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while let Some(id) = queue.pop_front() {
        if id == END || !seen.insert(id.clone()) {
            continue;
        }
        let Some(st) = by_id.get(id.as_str()) else { continue };
        if st.tags.contains(&SafetyTag::OrganismCheckpoint) {
            continue;
        }
        if st.tool.as_ref().is_some_and(|t| t.name == "lookup_guides") {
            out.push(id.clone());
        }
        queue.extend(st.transitions.values().cloned());
    }
    out
}

fn answer_as_user(engine: &Engine, s: &mut Session, gene: &str, organism: &str) -> Result<(), EngineError> {
    let p = engine.current_prompt(s)?;
    let reply = if !p.input.options.is_empty() {
        p.input.options[0].clone()
    } else if p.input.kind == "none" {
        "continue".into()
    } else if p.tags.contains(&SafetyTag::OrganismCheckpoint) {
        organism.into()
    } else {
        match engine.registry().state(&p.state_id).map(|(_, st)| st.validator.clone()) {
            Some(Validator::GeneSymbol) => gene.into(),
            Some(Validator::NucleotideSequence { min_len, .. }) => {
                let locus = engine.tools().loci[&gene.to_ascii_uppercase()].sequence.as_str().to_string();
                locus[..locus.len().max(min_len).min(locus.len())].to_string()
            }
            _ => "no preference".into(),
        }
    };
    engine.submit(s, TurnInput::user(reply)).map(|_| ())
}

fn gate_non_bypass(_: &mut Ctx) -> Check {
    let fx = fixtures();
    let table = fx.registry.task_table();
    let mut checked = 0;
    for meta in MetaTask::ALL {
        let plan = meta_pipeline(meta.as_str(), table).map_err(|e| e.to_string())?;
        for task in &plan.tasks {
            let def = fx.registry.machine(task).ok_or(format!("no machine {task}"))?;
            let oracle = bfs_bypasses(def);
            ensure(oracle.is_empty() && gate_violations(def).is_empty(), || format!("{meta}: {task} bypass {oracle:?}"))?;
            checked += 1;
        }
    }

    // Positive control: stripping the checkpoint tag must be caught by both
    // the oracle and the loader.
    let mut broken = fx.registry.machine("knockout.StateStep3").unwrap().clone();
    for s in &mut broken.states {
        s.tags.retain(|t| *t != SafetyTag::OrganismCheckpoint);
    }
    ensure(!bfs_bypasses(&broken).is_empty(), || "oracle missed the stripped checkpoint".into())?;
    ensure(!gate_violations(&broken).is_empty(), || "gate_violations missed the stripped checkpoint".into())?;
    let defs: Vec<WorkflowDef> = fx
        .registry
        .machines()
        .map(|d| if d.task_name == broken.task_name { broken.clone() } else { d.clone() })
        .collect();
    ensure(WorkflowRegistry::from_defs(defs, None).is_err(), || "loader accepted a bypass".into())?;

    // Runtime: every pipeline blocks a human session until the user acknowledges.
    let engine = fx.engine();
    for meta in MetaTask::ALL {
        let plan = meta_pipeline(meta.as_str(), table).unwrap();
        let mut s = engine.start_session(Mode::Meta, &plan.tasks, "edit TGFBR1").unwrap();
        let mut blocked = false;
        for _ in 0..80 {
            if s.is_completed() {
                break;
            }
            if s.status == Status::AwaitingAck {
                blocked = true;
                ensure(s.artifact("guides").is_none(), || format!("{meta}: guides before acknowledgment"))?;
                let e = engine.submit(&mut s, TurnInput::user("TGFBR1")).unwrap_err();
                ensure(e == EngineError::AckRequired, || format!("{meta}: submit while blocked gave {e}"))?;
                let e = engine.acknowledge(&mut s, TurnInput::autopilot(ACK, "agent")).unwrap_err();
                ensure(e == EngineError::AckRequiresUser, || format!("{meta}: agent ack gave {e}"))?;
                engine.acknowledge(&mut s, TurnInput::user(ACK)).map_err(|e| e.to_string())?;
                continue;
            }
            answer_as_user(&engine, &mut s, "TGFBR1", "human").map_err(|e| format!("{meta}: {e}"))?;
        }
        ensure(blocked, || format!("{meta}: never blocked"))?;
        ensure(s.artifact("guides").is_some(), || format!("{meta}: no guides after acknowledgment"))?;
    }
    // Control: a mouse session is never blocked.
    let plan = meta_pipeline("knockout", table).unwrap();
    let mut s = engine.start_session(Mode::Meta, &plan.tasks, "edit Pcsk9").unwrap();
    for _ in 0..40 {
        if s.is_completed() {
            break;
        }
        ensure(s.status != Status::AwaitingAck, || "mouse session blocked".into())?;
        answer_as_user(&engine, &mut s, "Pcsk9", "mouse").map_err(|e| e.to_string())?;
    }
    ensure(s.is_completed(), || "mouse session did not complete".into())?;
    Ok(format!("{checked} pipeline machines clean (BFS oracle + check); 4/4 human pipelines block until user ack"))
}

// ---------------------------------------------------------------- off-target

fn iupac(p: u8, b: u8) -> bool {
    match p {
        b'N' => true,
        b'V' => b != b'T',
        _ => p == b,
    }
}

type HitKey = (usize, Strand, usize);

fn brute_force(reference: &[u8], spacer: &[u8], k: usize, pam: &[u8], five_prime: bool) -> BTreeSet<HitKey> {
    let n = reference.len();
    let (sl, pl) = (spacer.len(), pam.len());
    let mut out = BTreeSet::new();
    let rc = revcomp(reference);
    for (strand, seq) in [(Strand::Forward, reference.to_vec()), (Strand::Reverse, rc)] {
        for i in 0..=n - sl - pl {
            let (site_pam, proto_at) = if five_prime { (&seq[i..i + pl], i + pl) } else { (&seq[i + sl..i + sl + pl], i) };
            if !site_pam.iter().zip(pam).all(|(&b, &p)| iupac(p, b)) {
                continue;
            }
            let mm = seq[proto_at..proto_at + sl].iter().zip(spacer).filter(|(a, b)| a != b).count();
            if mm <= k {
                let start = match strand {
                    Strand::Forward => proto_at,
                    Strand::Reverse => n - proto_at - sl,
                };
                out.insert((start, strand, mm));
            }
        }
    }
    out
}

fn offtarget_oracle(_: &mut Ctx) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0006);
    let mut worst = Duration::ZERO;
    let mut total_hits = 0;
    for case in 0..200 {
        let mut reference = random_dna(&mut rng, 10_000, 0.5).into_bytes();
        let spacer = random_dna(&mut rng, 20, 0.5).into_bytes();
        let k = rng.random_range(0..=4);
        let five_prime = case % 2 == 1;
        let pam: &[u8] = if five_prime { b"TTTV" } else { b"NGG" };
        for _ in 0..8 {
            let mut proto = spacer.clone();
            let mm = rng.random_range(0..=k + 1).min(20);
            let mut idx: Vec<usize> = (0..20).collect();
            idx.shuffle(&mut rng);
            for &i in &idx[..mm] {
                let alts: Vec<u8> = b"ACGT".iter().copied().filter(|&b| b != proto[i]).collect();
                proto[i] = alts[rng.random_range(0..3)];
            }
            let site_pam: Vec<u8> = pam
                .iter()
                .map(|&p| match p {
                    b'N' => b"ACGT"[rng.random_range(0..4)],
                    b'V' => b"ACG"[rng.random_range(0..3)],
                    b => b,
                })
                .collect();
            let site: Vec<u8> = if five_prime { [site_pam, proto].concat() } else { [proto, site_pam].concat() };
            let site = if rng.random_bool(0.5) { revcomp(&site) } else { site };
            let at = rng.random_range(0..reference.len() - site.len());
            reference[at..at + site.len()].copy_from_slice(&site);
        }
        let text = String::from_utf8(reference.clone()).unwrap();
        let refs = [Reference { id: "r".into(), sequence: DnaSeq::new(&text).unwrap() }];
        let rule = PamRule::from_pattern(std::str::from_utf8(pam).unwrap()).unwrap();
        let t = Instant::now();
        let report = off_target_search(std::str::from_utf8(&spacer).unwrap(), &refs, k, &rule).map_err(|e| e.to_string())?;
        worst = worst.max(t.elapsed());
        let got: BTreeSet<HitKey> = report.hits.iter().map(|h| (h.start, h.strand, h.mismatches)).collect();
        let want = brute_force(&reference, &spacer, k, pam, five_prime);
        ensure(got.len() == report.hits.len(), || format!("case {case}: duplicate hits"))?;
        ensure(got == want, || {
            let missing: Vec<_> = want.difference(&got).take(3).collect();
            let extra: Vec<_> = got.difference(&want).take(3).collect();
            format!("case {case} ({}, k={k}): missing {missing:?}, extra {extra:?}", rule.pattern())
        })?;
        total_hits += want.len();
    }
    ensure(worst < Duration::from_secs(1), || format!("slowest case {worst:?}"))?;
    Ok(format!("200/200 cases equal to brute force ({total_hits} hits), slowest {:.1} ms", worst.as_secs_f64() * 1e3))
}

// ---------------------------------------------------------------- primers

fn wallace(s: &[u8]) -> f64 {
    s.iter().map(|&b| if b == b'G' || b == b'C' { 4.0 } else { 2.0 }).sum()
}

fn gc(s: &[u8]) -> f64 {
    s.iter().filter(|&&b| b == b'G' || b == b'C').count() as f64 / s.len() as f64
}

fn homopolymer(s: &[u8]) -> usize {
    s.chunk_by(|a, b| a == b).map(<[u8]>::len).max().unwrap_or(0)
}

struct PrimerOracle<'a> {
    fwd: &'a [u8],
    counts: HashMap<Vec<u8>, usize>,
    c: PrimerConstraints,
}

impl<'a> PrimerOracle<'a> {
    fn new(fwd: &'a [u8], c: PrimerConstraints) -> Self {
        let rc = revcomp(fwd);
        let mut counts = HashMap::new();
        for l in c.min_length..=c.max_length {
            for strand in [fwd, rc.as_slice()] {
                for i in 0..strand.len().saturating_sub(l - 1) {
                    *counts.entry(strand[i..i + l].to_vec()).or_insert(0) += 1;
                }
            }
        }
        Self { fwd, counts, c }
    }

    fn single_ok(&self, p: &[u8]) -> bool {
        let c = &self.c;
        (c.min_length..=c.max_length).contains(&p.len())
            && (c.min_gc..=c.max_gc).contains(&gc(p))
            && (c.min_tm..=c.max_tm).contains(&wallace(p))
            && homopolymer(p) <= c.max_homopolymer
            && (!c.require_unique || self.counts.get(p) == Some(&1))
    }

    fn pair_ok(&self, pr: &PrimerPair, target: (usize, usize)) -> Result<(), String> {
        let (f, r) = (pr.forward.as_bytes(), pr.reverse.as_bytes());
        let n = self.fwd.len();
        let fe = pr.forward_start + f.len();
        let re = pr.reverse_start + r.len();
        ensure(fe <= n && re <= n, || "primer outside reference".into())?;
        ensure(&self.fwd[pr.forward_start..fe] == f, || "forward does not match template".into())?;
        ensure(revcomp(&self.fwd[pr.reverse_start..re]) == r, || "reverse is not the template's complement".into())?;
        ensure(fe <= target.0 && pr.reverse_start >= target.1, || "primers overlap target".into())?;
        ensure(self.single_ok(f) && self.single_ok(r), || format!("single-primer constraint fails: {pr:?}"))?;
        let product = re - pr.forward_start;
        ensure(product == pr.product_size, || "reported product size wrong".into())?;
        ensure((self.c.min_product..=self.c.max_product).contains(&product), || "product size".into())?;
        ensure((wallace(f) - wallace(r)).abs() <= self.c.max_tm_difference, || "tm difference".into())?;
        ensure(pr.forward_tm == wallace(f) && pr.reverse_tm == wallace(r), || "reported Tm wrong".into())?;
        Ok(())
    }

    /// Whether any valid pair exists, by enumerating every placement.
    fn feasible(&self, target: (usize, usize)) -> bool {
        let c = &self.c;
        let n = self.fwd.len();
        let mut fwd = Vec::new();
        let mut rev = Vec::new();
        for l in c.min_length..=c.max_length {
            for s in 0..=n.saturating_sub(l) {
                if s + l <= target.0 && self.single_ok(&self.fwd[s..s + l]) {
                    fwd.push((s, wallace(&self.fwd[s..s + l])));
                }
                if s >= target.1 {
                    let r = revcomp(&self.fwd[s..s + l]);
                    if self.single_ok(&r) {
                        rev.push((s + l, wallace(&r)));
                    }
                }
            }
        }
        fwd.iter().any(|&(fs, ft)| {
            rev.iter().any(|&(re, rt)| {
                re > fs && (c.min_product..=c.max_product).contains(&(re - fs)) && (ft - rt).abs() <= c.max_tm_difference
            })
        })
    }
}

fn primer_validity(_: &mut Ctx) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0007);
    let c = PrimerConstraints::default();
    let (mut emitted, mut feasible, mut recalled, mut infeasible, mut named) = (0, 0, 0, 0, 0);
    for case in 0..50 {
        let kind = case % 10;
        let seq = match kind {
            0..=5 => {
                let n = rng.random_range(400..=900);
                random_dna(&mut rng, n, 0.5)
            }
            6 | 7 => {
                let n = rng.random_range(400..=900);
                random_dna(&mut rng, n, 0.2)
            }
            8 => random_dna(&mut rng, 12, 0.5).repeat(60),
            _ => {
                let n = rng.random_range(60..140);
                random_dna(&mut rng, n, 0.5)
            }
        };
        let n = seq.len();
        let width = rng.random_range(20..=60).min(n / 3);
        let start = n / 2 - width / 2;
        let target = (start, start + width);
        let oracle = PrimerOracle::new(seq.as_bytes(), c.clone());
        let is_feasible = oracle.feasible(target);
        let result = design_primers(&DnaSeq::new(&seq).unwrap(), target.0..target.1, &c);
        match result {
            Ok(pairs) => {
                for p in &pairs {
                    oracle.pair_ok(p, target).map_err(|e| format!("case {case}: {e}"))?;
                }
                ensure(pairs.windows(2).all(|w| w[0].penalty <= w[1].penalty), || format!("case {case}: unsorted"))?;
                ensure(is_feasible, || format!("case {case}: oracle found no pair but design returned some"))?;
                emitted += pairs.len();
                feasible += 1;
                recalled += 1;
            }
            Err(GenomicsError::NoPrimersFound { constraint, .. }) => {
                if is_feasible {
                    feasible += 1;
                } else {
                    infeasible += 1;
                    named += usize::from(!constraint.to_string().is_empty());
                }
            }
            Err(e) => return Err(format!("case {case}: unexpected error {e}")),
        }
    }
    let recall = recalled as f64 / feasible as f64;
    ensure(feasible > 0 && recall >= 0.9, || format!("feasible recall {recall:.3} ({recalled}/{feasible})"))?;
    ensure(infeasible > 0 && named == infeasible, || format!("{named}/{infeasible} infeasible cases named a constraint"))?;
    Ok(format!(
        "{emitted} pairs all re-pass; feasible recall {recall:.2} ({recalled}/{feasible}); {named}/{infeasible} infeasible name a constraint"
    ))
}

// ---------------------------------------------------------------- knockout end to end

fn knockout_run(ctx: &mut Ctx, gene: &str, request: &str) -> Result<(Session, String), String> {
    let engine = fixtures().engine();
    let provider = ctx.audited(script("knockout_autopilot"));
    let plan = meta_pipeline("knockout", fixtures().registry.task_table()).unwrap();
    let mut s = engine.start_session(Mode::Meta, &plan.tasks, request).unwrap();
    for _ in 0..5 {
        let t = run_autopilot(&engine, &mut s, request, &provider, &cfg(), 50, None).map_err(|e| format!("{gene}: {e}"))?;
        match (t.termination, t.handoff()) {
            (Termination::Completed, _) => break,
            (Termination::Handoff, Some(HandoffReason::AcknowledgmentRequired)) => {
                engine.acknowledge(&mut s, TurnInput::user(ACK)).map_err(|e| e.to_string())?;
            }
            other => return Err(format!("{gene}: unexpected stop {other:?}")),
        }
    }
    ensure(s.is_completed(), || format!("{gene}: did not complete"))?;
    let report = engine.export_report(&s).map_err(|e| e.to_string())?.to_json();
    Ok((s, report))
}

fn knockout_e2e(ctx: &mut Ctx) -> Check {
    let t = Instant::now();
    let mut lines = Vec::new();
    for gene in ["TGFBR1", "SNAI1", "BAX", "BCL2L1"] {
        let request = format!("knockout {gene} in human A375 cells");
        let (_, a) = knockout_run(ctx, gene, &request)?;
        let (_, b) = knockout_run(ctx, gene, &request)?;
        ensure(a == b, || format!("{gene}: reports differ between runs"))?;
        let r: Value = serde_json::from_str(&a).unwrap();
        let guides = r["guides"].as_array().map(Vec::len).unwrap_or(0);
        ensure(guides == 4, || format!("{gene}: {guides} guides"))?;
        ensure(r["guides"].as_array().unwrap().iter().all(|g| g["gene"] == gene), || format!("{gene}: wrong gene"))?;
        ensure(r["protocol"]["reference"].as_str().is_some_and(|s| !s.is_empty()), || format!("{gene}: no protocol reference"))?;
        ensure(r["primers"]["pairs"].as_array().is_some_and(|p| !p.is_empty()), || format!("{gene}: no primers"))?;
        ensure(r["acknowledgments"].as_array().is_some_and(|a| a.len() == 1), || format!("{gene}: no acknowledgment"))?;
        let cas = r["decisions"].as_array().unwrap().iter().any(|d| d["value"] == "AsCas12a");
        let lenti = r["decisions"].as_array().unwrap().iter().any(|d| d["value"].as_str().is_some_and(|v| v.starts_with("Lentiviral")));
        ensure(cas && lenti, || format!("{gene}: expected AsCas12a and lentiviral decisions"))?;
        lines.push(format!("{gene}:{guides}"));
    }
    let elapsed = t.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("guides {} ; reports byte-identical ; {:.2} s", lines.join(" "), elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------- crash recovery

fn crash_recovery(_: &mut Ctx) -> Check {
    let engine = fixtures().engine();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0009);
    let (mut equal, mut tails) = (0, 0);
    for case in 0..20 {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        let mut s = random_session(&engine, &mut rng);
        store.save(&s).unwrap();
        let mut by_len: BTreeMap<usize, Session> = BTreeMap::from([(0, s.clone())]);
        let stop = rng.random_range(1..=30);
        for _ in 0..stop {
            random_step(&engine, &mut s, &mut rng);
            store.save(&s).unwrap();
            by_len.insert(s.history.len(), s.clone());
        }
        drop(store);

        let recovered = SessionStore::open(dir.path()).unwrap().recover(s.id(), &engine).map_err(|e| format!("case {case}: {e}"))?;
        ensure(recovered.session == s && recovered.corrupt_line.is_none(), || {
            format!("case {case}: recovered state differs after {} turns", s.history.len())
        })?;
        equal += 1;

        // A torn final write: the last record loses its tail.
        let n = s.history.len();
        if n == 0 {
            continue;
        }
        let log = dir.path().join(s.id()).join("log.jsonl");
        let text = std::fs::read_to_string(&log).unwrap();
        let keep = text.trim_end().len() - rng.random_range(1..20);
        std::fs::write(&log, &text[..keep]).unwrap();
        let r = SessionStore::open(dir.path()).unwrap().recover(s.id(), &engine).map_err(|e| format!("case {case}: {e}"))?;
        let mut want = by_len[&(n - 1)].clone();
        want.needs_review = true;
        ensure(r.session.history.len() == n - 1, || format!("case {case}: torn tail gave {} turns", r.session.history.len()))?;
        ensure(r.session == want, || format!("case {case}: torn-tail state differs"))?;
        tails += 1;
    }
    Ok(format!("{equal}/20 sessions replay to equal state; {tails}/{tails} torn tails recover to n-1 with needs_review"))
}

// ---------------------------------------------------------------- autopilot rule 3

/// A script answering every state of the shipped workflows, including
/// sequence answers for sequence states that the agent must never use.
fn tempting_script(rng: &mut impl Rng, gene: &str, organism: &str) -> Script {
    let mut entries = Vec::new();
    for def in fixtures().registry.machines() {
        for st in &def.states {
            let tag = format!("[state: {}]", st.id);
            let answer = if !st.input.options().is_empty() {
                let opts = st.input.options();
                opts[rng.random_range(0..opts.len())].clone()
            } else if st.tags.contains(&SafetyTag::OrganismCheckpoint) {
                organism.to_string()
            } else {
                match st.validator {
                    Validator::GeneSymbol => gene.to_string(),
                    Validator::NucleotideSequence { .. } => "GACGTTCGCTACCAAAGTCATGG".to_string(),
                    Validator::Any => "no preference".to_string(),
                }
            };
            let body = json!({"Thoughts": "scripted", "Answer": answer}).to_string();
            entries.push(ScriptEntry::new(&[tag.as_str()], body).repeating());
        }
    }
    Script { strict: true, fallback: None, entries }
}

fn autopilot_rule3(ctx: &mut Ctx) -> Check {
    let fx = fixtures();
    let engine = fx.engine();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0010);
    let (mut visits, mut handoffs, mut runs) = (0, 0, 0);
    let genes = ["TGFBR1", "SNAI1", "BAX", "BCL2L1", "EGFR"];
    for run in 0..40 {
        let meta = MetaTask::ALL[run % 4];
        let gene = genes[rng.random_range(0..genes.len())];
        let organism = if rng.random_bool(0.7) { "human" } else { "HEK293T" };
        let provider = ctx.audited(tempting_script(&mut rng, gene, organism));
        let request = format!("edit {gene} in {organism} cells");
        let plan = meta_pipeline(meta.as_str(), fx.registry.task_table()).unwrap();
        let mut s = engine.start_session(Mode::Meta, &plan.tasks, &request).unwrap();
        for _ in 0..20 {
            let t = match run_autopilot(&engine, &mut s, &request, &provider, &cfg(), 60, None) {
                Ok(t) => t,
                Err(e) => return Err(format!("run {run} ({meta}): {e}")),
            };
            for e in &t.entries {
                let (_, st) = engine.registry().state(&e.decision.state_id).unwrap();
                if st.tags.contains(&SafetyTag::RequestsSequence) {
                    visits += 1;
                    ensure(e.decision.kind == DecisionKind::Handoff { reason: HandoffReason::RequestsSequence }, || {
                        format!("run {run}: {} got {:?}", st.id, e.decision.kind)
                    })?;
                    handoffs += 1;
                }
            }
            match (t.termination, t.handoff()) {
                (Termination::Completed, _) => break,
                (Termination::StepLimit, _) => return Err(format!("run {run}: step limit")),
                (_, Some(HandoffReason::AcknowledgmentRequired)) => {
                    engine.acknowledge(&mut s, TurnInput::user(ACK)).map_err(|e| e.to_string())?;
                }
                (_, Some(HandoffReason::RequestsSequence)) => {
                    let p = engine.current_prompt(&s).unwrap();
                    let reply = match engine.registry().state(&p.state_id).unwrap().1.validator {
                        Validator::NucleotideSequence { max_len, .. } if max_len < 100 => "GACGTTCGCTACCAAAGTCATGG".to_string(),
                        _ => fx.tools.loci[gene].sequence.as_str().to_string(),
                    };
                    engine.submit(&mut s, TurnInput::user(reply)).map_err(|e| format!("run {run}: {e}"))?;
                }
                (_, other) => return Err(format!("run {run}: unexpected handoff {other:?}")),
            }
        }
        ensure(s.is_completed(), || format!("run {run} ({meta}) did not complete"))?;
        let agent_at_sequence = s.history.iter().any(|t| {
            t.responder == Responder::Autopilot
                && engine.registry().state(&t.state_id).is_some_and(|(_, st)| st.tags.contains(&SafetyTag::RequestsSequence))
        });
        ensure(!agent_at_sequence, || format!("run {run}: agent answered a sequence state"))?;
        runs += 1;
    }
    ensure(visits >= 20, || format!("only {visits} sequence-state visits; coverage too thin"))?;
    Ok(format!("{handoffs}/{visits} sequence-state visits handed off across {runs} runs"))
}

// ---------------------------------------------------------------- no leak

fn no_leak(ctx: &mut Ctx) -> Check {
    // Adversarial traffic through the API state: sequences in requests,
    // questions and pasted answers.
    let provider = ctx.audited(script("default"));
    let st = state(provider, None);
    let seq = "ACGTTGCAACGTTGCAACGTAGGCT";
    let blocked = st
        .create_session(json!({"mode": "auto", "request": format!("knockout the gene at {seq}")}).to_string().as_bytes(), None)
        .unwrap_err();
    ensure(blocked.code == "filter_blocked", || format!("auto request gave {}", blocked.code))?;
    let blocked = st.post_qa(json!({"question": format!("Is {seq} a good guide?")}).to_string().as_bytes()).unwrap_err();
    ensure(blocked.code == "filter_blocked", || format!("question gave {}", blocked.code))?;
    st.post_qa(json!({"question": "What is Cas12a?"}).to_string().as_bytes()).map_err(|e| e.message)?;

    let request = format!("knockout TGFBR1 in human A375 cells; my amplicon is {seq}");
    let created = st
        .create_session(json!({"mode": "meta", "meta_task": "knockout", "request": request}).to_string().as_bytes(), None)
        .map_err(|e| e.message)?;
    let id = created["session_id"].as_str().unwrap().to_string();
    for _ in 0..6 {
        let r = st.post_autopilot(&id, b"{}").map_err(|e| e.message)?;
        match r["handoff"].as_str() {
            None if r["status"] == "completed" => break,
            Some("acknowledgment_required") => {
                st.post_ack(&id, json!({"acknowledgment": ACK}).to_string().as_bytes()).map_err(|e| e.message)?;
            }
            Some(_) => {
                let locus = fixtures().tools.loci["TGFBR1"].sequence.as_str().to_string();
                let prompt = &r["prompt"];
                let reply = if prompt["input"]["options"].is_array() { "2".to_string() } else { locus };
                let _ = st.post_override(&id, json!({ "response": reply }).to_string().as_bytes());
            }
            None => return Err(format!("autopilot stopped: {r}")),
        }
    }

    let calls: usize = ctx.auditors.iter().map(|a| a.calls()).sum();
    let leaks: usize = ctx.auditors.iter().map(|a| a.leaks()).sum();
    ensure(calls > 0, || "no provider traffic was audited".into())?;
    ensure(leaks == 0, || format!("{leaks} of {calls} payloads carried a run >= 20 nt"))?;
    Ok(format!("0 leaks in {calls} audited payloads across {} providers", ctx.auditors.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("01", "planner demonstration fidelity", planner_demo),
        ("02", "dependency closure", dependency_closure),
        ("03", "safety filter fuzz", filter_fuzz),
        ("05", "gate non-bypass", gate_non_bypass),
        ("06", "off-target oracle equivalence", offtarget_oracle),
        ("07", "primer validity", primer_validity),
        ("08", "end-to-end knockout replay", knockout_e2e),
        ("09", "crash recovery", crash_recovery),
        ("10", "autopilot sequence handoff", autopilot_rule3),
        // Last, so it audits the traffic of every scenario above.
        ("04", "no-leak end to end", no_leak),
    ];
    let mut ctx = Ctx::default();
    let mut failed = 0;
    for (id, name, f) in criteria {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| f(&mut ctx)))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into())));
        let ms = t.elapsed().as_secs_f64() * 1e3;
        match result {
            Ok(detail) => println!("PASS [{id}] {name}: {detail} ({ms:.0} ms)"),
            Err(why) => {
                failed += 1;
                println!("FAIL [{id}] {name}: {why} ({ms:.0} ms)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
