//! Command-line interface. Exit codes: 0 success, 2 invalid input or
//! findings, 1 runtime failure.

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::collections::{BTreeMap, VecDeque};
use std::io::BufRead;
use std::path::PathBuf;
use thiserror::Error;

use crispr_agent::autopilot::{run_autopilot, AutopilotError, HandoffReason, Termination};
use crispr_agent::fixtures::Fixtures;
use crispr_agent::genomics::{design_primers, load_fasta, off_target_search, GenomicsError, GuideLibrary, PrimerConstraints};
use crispr_agent::llm::GatewayError;
use crispr_agent::planner::{decompose, meta_pipeline, validate_plan, Plan, PlannerError};
use crispr_agent::qa::{load_corpus, Index};
use crispr_agent::safety::{scan_nucleotide_runs, DEFAULT_THRESHOLD};
use crispr_agent::workflow::{EngineError, Mode, TurnInput, WorkflowRegistry};

use crate::api::{pick_record, resolve_pam, AppState};
use crate::config::{ConfigError, FixtureArgs, ProviderArgs};
use crate::store::SessionStore;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<GenomicsError> for CliError {
    fn from(e: GenomicsError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::FilterBlocked { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<PlannerError> for CliError {
    fn from(e: PlannerError) -> Self {
        match e {
            PlannerError::Gateway(g) => g.into(),
            PlannerError::UnknownMetaTask(_) | PlannerError::UnknownTaskName(_) | PlannerError::EmptyRequest => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::ToolFailure { .. } | EngineError::ReplayDivergence(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<AutopilotError> for CliError {
    fn from(e: AutopilotError) -> Self {
        match e {
            AutopilotError::Engine(e) => e.into(),
            AutopilotError::Gateway(g) => g.into(),
            AutopilotError::InvalidStepLimit => CliError::Validation(e.to_string()),
        }
    }
}

fn io_err(what: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{what}: {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "crispr-agent", version, about = "Guided CRISPR experiment design")]
pub struct Cli {
    #[command(flatten)]
    pub fixtures: FixtureArgs,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a design session under autopilot and print its report.
    Run(RunArgs),
    /// Print the validated task plan for a meta task, task list or request.
    Plan(PlanArgs),
    /// Scan references for off-target sites of a spacer.
    Offtarget(OffTargetArgs),
    /// Design PCR primer pairs flanking a target span.
    Primers(PrimerArgs),
    /// Report nucleotide runs in text; exits 2 when any are found.
    Scan(ScanArgs),
    /// Validate a guide library, workflow directory or corpus.
    Ingest(IngestArgs),
    /// Start the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct PlanSource {
    /// Predefined pipeline: knockout, base_editing, prime_editing, activation_interference.
    #[arg(long)]
    pub meta: Option<String>,
    /// Explicit task names (repeatable).
    #[arg(long = "task")]
    pub tasks: Vec<String>,
    /// Free-text request; decomposed by the provider when no plan is given.
    #[arg(long, default_value = "")]
    pub request: String,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub source: PlanSource,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: PlanSource,
    /// Answer for a state, as STATE_ID=TEXT (repeatable, used in order).
    #[arg(long = "answer", value_parser = parse_answer)]
    pub answers: Vec<(String, String)>,
    /// Acknowledgment text for the germline warning.
    #[arg(long)]
    pub ack: Option<String>,
    #[arg(long, default_value_t = 50)]
    pub step_limit: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Persist the session under this directory.
    #[arg(long, env = "CDA_STORE")]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OffTargetArgs {
    #[arg(long)]
    pub guide: String,
    /// FASTA to scan; defaults to the configured genome.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    #[arg(long = "max-mm", default_value_t = 3)]
    pub max_mismatches: usize,
    #[arg(long)]
    pub pam: Option<String>,
    /// Nuclease name used to pick the PAM when --pam is absent.
    #[arg(long)]
    pub system: Option<String>,
}

#[derive(Debug, Args)]
pub struct PrimerArgs {
    /// FASTA holding the template.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub record: Option<String>,
    /// Use the configured locus for this gene as the template.
    #[arg(long)]
    pub gene: Option<String>,
    /// Target span as START..END (0-based, half-open).
    #[arg(long, value_parser = parse_span)]
    pub target: (usize, usize),
    /// JSON file with primer constraints.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Text to scan, or @PATH to read a file.
    #[arg(long)]
    pub text: String,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: usize,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long = "guide-library")]
    pub guide_library: Option<PathBuf>,
    #[arg(long = "workflow-dir")]
    pub workflow_dir: Option<PathBuf>,
    #[arg(long = "corpus-dir")]
    pub corpus_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "CDA_BIND", default_value = "127.0.0.1:8080")]
    pub bind: String,
    #[arg(long, env = "CDA_STORE")]
    pub store: Option<PathBuf>,
}

fn parse_answer(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.to_string()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| format!("expected STATE_ID=TEXT, got `{s}`"))
}

fn parse_span(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected START..END, got `{s}`"))?;
    let n = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("`{x}`: {e}"));
    Ok((n(a)?, n(b)?))
}

pub enum Outcome {
    Done { stdout: String, code: u8 },
    Serve { state: Box<AppState>, bind: String },
}

fn done(v: &Value) -> Outcome {
    Outcome::Done {
        stdout: serde_json::to_string_pretty(v).expect("json values serialize"),
        code: 0,
    }
}

pub fn run_cli(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Plan(a) => {
            let fx = cli.fixtures.load()?;
            let (_, plan) = plan_from(&a.source, &fx, &cli.provider, &cli.fixtures)?;
            Ok(done(&serde_json::to_value(plan).expect("plans serialize")))
        }
        Command::Run(a) => run_session(a, &cli.fixtures, &cli.provider),
        Command::Offtarget(a) => {
            let path = a.reference.unwrap_or_else(|| cli.fixtures.paths().genome);
            let refs = load_fasta(&path)?;
            let rule = resolve_pam(a.pam.as_deref(), a.system.as_deref())?;
            let report = off_target_search(&a.guide, &refs, a.max_mismatches, &rule)?;
            Ok(done(&json!({"histogram": report.mismatch_histogram(), "report": report})))
        }
        Command::Primers(a) => {
            let template = match (&a.reference, &a.gene) {
                (Some(p), None) => pick_record(load_fasta(p)?, a.record.as_deref())?,
                (None, Some(gene)) => {
                    let loci = load_fasta(&cli.fixtures.paths().loci)?;
                    pick_record(loci, Some(gene))?
                }
                _ => return Err(CliError::Validation("give exactly one of --ref or --gene".into())),
            };
            let constraints = match &a.constraints {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| io_err(&p.display().to_string(), e))?;
                    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("constraints: {e}")))?
                }
                None => PrimerConstraints::default(),
            };
            let pairs = design_primers(&template.sequence, a.target.0..a.target.1, &constraints)?;
            Ok(done(&json!({"reference": template.id, "pairs": pairs})))
        }
        Command::Scan(a) => {
            let text = match a.text.strip_prefix('@') {
                Some(p) => std::fs::read_to_string(p).map_err(|e| io_err(p, e))?,
                None => a.text,
            };
            let findings = scan_nucleotide_runs(&text, a.threshold);
            let code = if findings.is_empty() { 0 } else { 2 };
            Ok(Outcome::Done {
                stdout: serde_json::to_string_pretty(&json!({"findings": findings})).expect("findings serialize"),
                code,
            })
        }
        Command::Ingest(a) => ingest(a),
        Command::Serve(a) => {
            let fx = cli.fixtures.load()?;
            let provider = cli.provider.build(&cli.fixtures.fixtures)?;
            let store = a.store.map(SessionStore::open).transpose().map_err(ConfigError::from)?;
            let state = AppState::new(fx, provider, cli.provider.config(), store)?;
            Ok(Outcome::Serve {
                state: Box::new(state),
                bind: a.bind,
            })
        }
    }
}

fn plan_from(
    src: &PlanSource,
    fx: &Fixtures,
    provider: &ProviderArgs,
    fixture_args: &FixtureArgs,
) -> Result<(Mode, Plan), CliError> {
    let table = fx.registry.task_table();
    match (&src.meta, src.tasks.is_empty()) {
        (Some(_), false) => Err(CliError::Validation("give either --meta or --task, not both".into())),
        (Some(m), true) => Ok((Mode::Meta, meta_pipeline(m, table)?)),
        (None, false) => Ok((Mode::Meta, validate_plan(&src.tasks, table)?)),
        (None, true) => {
            let p = provider.build(&fixture_args.fixtures)?;
            let plan = decompose(&src.request, table, &p, &provider.config(), &fx.safety)?;
            Ok((Mode::Auto, plan))
        }
    }
}

fn run_session(a: RunArgs, fixture_args: &FixtureArgs, provider_args: &ProviderArgs) -> Result<Outcome, CliError> {
    let fx = fixture_args.load()?;
    let (mode, plan) = plan_from(&a.source, &fx, provider_args, fixture_args)?;
    let provider = provider_args.build(&fixture_args.fixtures)?;
    let config = provider_args.config();
    let engine = fx.engine();
    let store = a.store.as_ref().map(SessionStore::open).transpose().map_err(ConfigError::from)?;
    let save = |s: &crispr_agent::workflow::Session| -> Result<(), CliError> {
        match &store {
            Some(st) => st.save(s).map_err(|e| CliError::Runtime(e.to_string())),
            None => Ok(()),
        }
    };

    let mut answers: BTreeMap<String, VecDeque<String>> = BTreeMap::new();
    for (k, v) in a.answers {
        answers.entry(k).or_default().push_back(v);
    }
    let mut stdin = std::io::stdin().lock().lines();
    let meta = a.source.request.clone();
    let mut s = engine.start_session(mode, &plan.tasks, &a.source.request)?;
    save(&s)?;

    loop {
        let mut hook = |p: &crispr_agent::workflow::RenderedPrompt, _: &crispr_agent::autopilot::AgentDecision| {
            answers.get_mut(&p.state_id).and_then(VecDeque::pop_front)
        };
        let t = run_autopilot(&engine, &mut s, &meta, &provider, &config, a.step_limit, Some(&mut hook));
        save(&s)?;
        let t = t?;
        match t.termination {
            Termination::Completed => break,
            Termination::StepLimit => {
                return Err(CliError::Validation(format!("step limit of {} reached", a.step_limit)))
            }
            Termination::Handoff => {}
        }
        let prompt = engine.current_prompt(&s)?;
        let reason = t.handoff();
        eprintln!("[{}] {}", prompt.state_id, prompt.instruction);
        for w in &prompt.warnings {
            eprintln!("warning: {} ({})", w.warning, w.moratorium_reference);
        }
        let from_flag = match reason {
            Some(HandoffReason::AcknowledgmentRequired) => a.ack.clone(),
            _ => None,
        };
        let reply = match from_flag {
            Some(r) => r,
            None => match stdin.next() {
                Some(Ok(line)) => line,
                Some(Err(e)) => return Err(io_err("stdin", e)),
                None => {
                    return Err(CliError::Validation(format!(
                        "input needed at `{}` ({:?}); pass --answer {}=... or --ack",
                        prompt.state_id,
                        reason.map(|r| serde_json::to_value(r).expect("reasons serialize")),
                        prompt.state_id
                    )))
                }
            },
        };
        let r = match reason {
            Some(HandoffReason::AcknowledgmentRequired) => engine.acknowledge(&mut s, TurnInput::user(reply)),
            _ => engine.submit(&mut s, TurnInput::user(reply)),
        };
        save(&s)?;
        if let Err(e) = r {
            eprintln!("rejected: {e}");
        }
    }

    let report = engine.export_report(&s)?.to_json();
    match &a.out {
        Some(p) => {
            std::fs::write(p, &report).map_err(|e| io_err(&p.display().to_string(), e))?;
            Ok(Outcome::Done {
                stdout: format!("report written to {}", p.display()),
                code: 0,
            })
        }
        None => Ok(Outcome::Done { stdout: report, code: 0 }),
    }
}

fn ingest(a: IngestArgs) -> Result<Outcome, CliError> {
    if a.guide_library.is_none() && a.workflow_dir.is_none() && a.corpus_dir.is_none() {
        return Err(CliError::Validation(
            "nothing to ingest; pass --guide-library, --workflow-dir or --corpus-dir".into(),
        ));
    }
    let mut out = serde_json::Map::new();
    if let Some(p) = &a.guide_library {
        let lib = GuideLibrary::load(p)?;
        out.insert(
            "library".into(),
            json!({"groups": lib.group_count(), "records": lib.record_count(), "genes": lib.gene_symbols()}),
        );
    }
    if let Some(p) = &a.workflow_dir {
        let reg = WorkflowRegistry::load_dir(p).map_err(|e| CliError::Validation(e.to_string()))?;
        out.insert(
            "workflows".into(),
            json!({"machines": reg.len(), "tasks": reg.task_names().collect::<Vec<_>>()}),
        );
    }
    if let Some(p) = &a.corpus_dir {
        let docs = load_corpus(p).map_err(|e| CliError::Validation(e.to_string()))?;
        let index = Index::build(&docs).map_err(|e| CliError::Validation(e.to_string()))?;
        out.insert("corpus".into(), json!({"documents": docs.len(), "chunks": index.chunks().len()}));
    }
    Ok(done(&Value::Object(out)))
}
