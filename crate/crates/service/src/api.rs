//! HTTP API over the engine, planner, autopilot and tools.

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dashmap::DashMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex};

use crispr_agent::autopilot::{run_autopilot, AutopilotError};
use crispr_agent::fixtures::Fixtures;
use crispr_agent::genomics::{
    design_primers, off_target_search, parse_fasta, DnaSeq, GenomicsError, PamRule, PrimerConstraints, Reference,
};
use crispr_agent::llm::{GatewayError, ProviderConfig, SharedProvider};
use crispr_agent::planner::{decompose, meta_pipeline, validate_plan, Plan, PlannerError};
use crispr_agent::qa::{answer_question, route_message, QaError, Route, DEFAULT_TOP_K};
use crispr_agent::tools::{pam_for_system, DEFAULT_MAX_MISMATCHES};
use crispr_agent::workflow::{Engine, EngineError, Mode, Session, SessionHub, TurnInput};

use crate::config::ConfigError;
use crate::store::{SessionStore, StoreError};

pub const DEFAULT_STEP_LIMIT: usize = 50;

/// Error body returned by every endpoint.
#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.to_string(),
            message: message.into(),
            detail: None,
        }
    }

    fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn unprocessable(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match &e {
            EngineError::NoSuchSession(_) => StatusCode::NOT_FOUND,
            EngineError::SessionCompleted
            | EngineError::SessionIncomplete
            | EngineError::WrongStatus(_)
            | EngineError::AckRequired
            | EngineError::NotAwaitingAck
            | EngineError::AckRequiresUser
            | EngineError::GateRequired { .. } => StatusCode::CONFLICT,
            EngineError::ReplayDivergence(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let err = ApiError::new(status, e.code(), e.to_string());
        match e {
            EngineError::InvalidChoice { options, .. } => err.with_detail(json!({ "options": options })),
            EngineError::ToolFailure { tool, .. } => err.with_detail(json!({ "tool": tool })),
            _ => err,
        }
    }
}

impl From<GatewayError> for ApiError {
    fn from(e: GatewayError) -> Self {
        let msg = e.to_string();
        match e {
            GatewayError::FilterBlocked { field, findings, .. } => {
                // Positions only; the run itself is not echoed back.
                let spans: Vec<Value> = findings
                    .iter()
                    .map(|f| json!({"start": f.start, "end": f.end, "length": f.length}))
                    .collect();
                ApiError::unprocessable("filter_blocked", msg).with_detail(json!({"field": field, "findings": spans}))
            }
            GatewayError::ProviderTimeout => ApiError::new(StatusCode::GATEWAY_TIMEOUT, "provider_timeout", msg),
            GatewayError::ProviderTransport(_) => ApiError::new(StatusCode::BAD_GATEWAY, "provider_transport", msg),
            GatewayError::ScriptMiss(_) => ApiError::new(StatusCode::BAD_GATEWAY, "script_miss", msg),
            GatewayError::Unparsable(_) => ApiError::new(StatusCode::BAD_GATEWAY, "unparsable_response", msg),
            GatewayError::Config(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "provider_config", msg),
        }
    }
}

impl From<PlannerError> for ApiError {
    fn from(e: PlannerError) -> Self {
        let msg = e.to_string();
        match e {
            PlannerError::Gateway(g) => g.into(),
            PlannerError::UnknownMetaTask(_) => ApiError::unprocessable("unknown_meta_task", msg),
            PlannerError::UnknownTaskName(name) => {
                ApiError::unprocessable("unknown_task_name", msg).with_detail(json!({ "task": name }))
            }
            PlannerError::EmptyRequest => ApiError::unprocessable("empty_request", msg),
            PlannerError::EmptyPlanFromProvider => ApiError::new(StatusCode::BAD_GATEWAY, "empty_plan_from_provider", msg),
            PlannerError::UnparsableResponse(_) => ApiError::new(StatusCode::BAD_GATEWAY, "unparsable_response", msg),
            PlannerError::MissingPipeline(_)
            | PlannerError::CyclicDependencies(_)
            | PlannerError::DuplicateTask(_)
            | PlannerError::UnknownDependency { .. } => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "task_table", msg)
            }
        }
    }
}

impl From<QaError> for ApiError {
    fn from(e: QaError) -> Self {
        match e {
            QaError::Gateway(g) => g.into(),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "corpus", other.to_string()),
        }
    }
}

impl From<AutopilotError> for ApiError {
    fn from(e: AutopilotError) -> Self {
        match e {
            AutopilotError::Engine(e) => e.into(),
            AutopilotError::Gateway(g) => g.into(),
            AutopilotError::InvalidStepLimit => ApiError::unprocessable("invalid_step_limit", e.to_string()),
        }
    }
}

impl From<GenomicsError> for ApiError {
    fn from(e: GenomicsError) -> Self {
        let msg = e.to_string();
        match e {
            GenomicsError::NoPrimersFound { constraint, .. } => {
                ApiError::unprocessable("no_primers_found", msg).with_detail(json!({ "constraint": constraint }))
            }
            GenomicsError::Alphabet { position, .. } => {
                ApiError::unprocessable("invalid_sequence", msg).with_detail(json!({ "position": position }))
            }
            GenomicsError::SpanOutOfRange { .. } => ApiError::unprocessable("span_out_of_range", msg),
            GenomicsError::InvalidPam(_) => ApiError::unprocessable("invalid_pam", msg),
            GenomicsError::Fasta { line, .. } => {
                ApiError::unprocessable("invalid_fasta", msg).with_detail(json!({ "line": line }))
            }
            _ => ApiError::unprocessable("invalid_argument", msg),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store", e.to_string())
    }
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let body: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { body };
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("invalid_body", e.to_string()))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("response types serialize")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub mode: Mode,
    #[serde(default)]
    pub request: String,
    #[serde(default)]
    pub plan: Option<Vec<String>>,
    #[serde(default)]
    pub meta_task: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ResponseBody {
    response: String,
}

#[derive(Debug, Default, Deserialize)]
struct AckBody {
    #[serde(default)]
    acknowledgment: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
struct AutopilotBody {
    #[serde(default)]
    meta_prompt: Option<String>,
    #[serde(default)]
    step_limit: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct QaBody {
    question: String,
    #[serde(default)]
    top_k: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct OffTargetBody {
    #[serde(alias = "guide")]
    pub spacer: String,
    #[serde(default)]
    pub max_mismatches: Option<usize>,
    /// PAM pattern such as `NGG` or `TTTV`.
    #[serde(default)]
    pub pam: Option<String>,
    /// Nuclease name used to pick the PAM when `pam` is absent.
    #[serde(default)]
    pub system: Option<String>,
    /// FASTA text to scan instead of the loaded genome.
    #[serde(default)]
    pub reference: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct PrimerBody {
    /// FASTA text or a bare sequence. Either this or `gene` is required.
    #[serde(default)]
    pub reference: Option<String>,
    /// Record to use when `reference` holds several.
    #[serde(default)]
    pub record: Option<String>,
    /// Loaded locus to use as the template.
    #[serde(default)]
    pub gene: Option<String>,
    /// Half-open span `[start, end)` the product must contain.
    pub target: (usize, usize),
    #[serde(default)]
    pub constraints: Option<PrimerConstraints>,
}

/// Resolves the PAM rule from an explicit pattern or a nuclease name (SpCas9 default).
pub fn resolve_pam(pam: Option<&str>, system: Option<&str>) -> Result<PamRule, GenomicsError> {
    if let Some(p) = pam {
        return PamRule::from_pattern(p);
    }
    match system {
        Some(s) => pam_for_system(s).ok_or_else(|| GenomicsError::InvalidArgument(format!("unknown nuclease `{s}`"))),
        None => Ok(PamRule::cas9()),
    }
}

/// Reads FASTA text, or a bare sequence as a single record named `input`.
pub fn references_from_text(text: &str) -> Result<Vec<Reference>, GenomicsError> {
    if text.trim_start().starts_with('>') {
        parse_fasta(text)
    } else {
        let seq: String = text.split_whitespace().collect();
        Ok(vec![Reference {
            id: "input".into(),
            sequence: DnaSeq::new(&seq)?,
        }])
    }
}

pub fn pick_record(refs: Vec<Reference>, record: Option<&str>) -> Result<Reference, GenomicsError> {
    match record {
        Some(id) => refs
            .into_iter()
            .find(|r| r.id == id)
            .ok_or_else(|| GenomicsError::InvalidArgument(format!("no record `{id}` in the reference"))),
        None => refs
            .into_iter()
            .next()
            .ok_or_else(|| GenomicsError::InvalidArgument("reference holds no records".into())),
    }
}

fn sha256_file(path: &Path) -> Option<String> {
    fs::read(path).ok().map(|b| hex::encode(Sha256::digest(&b)))
}

/// Hash over every file below `dir`, in sorted relative-path order.
fn sha256_tree(dir: &Path) -> Option<String> {
    fn walk(dir: &Path, out: &mut Vec<std::path::PathBuf>) -> std::io::Result<()> {
        for entry in fs::read_dir(dir)? {
            let p = entry?.path();
            if p.is_dir() {
                walk(&p, out)?;
            } else {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(dir, &mut files).ok()?;
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        let rel = f.strip_prefix(dir).ok()?.to_string_lossy().replace('\\', "/");
        h.update(rel.as_bytes());
        h.update([0]);
        h.update(fs::read(&f).ok()?);
        h.update([0]);
    }
    Some(hex::encode(h.finalize()))
}

pub fn fixture_hashes(fixtures: &Fixtures) -> BTreeMap<String, Option<String>> {
    let mut out: BTreeMap<String, Option<String>> = fixtures
        .paths
        .files()
        .into_iter()
        .map(|(label, p)| (label.to_string(), sha256_file(p)))
        .collect();
    out.insert("workflows".into(), sha256_tree(&fixtures.paths.workflows));
    out.insert("corpus".into(), sha256_tree(&fixtures.paths.corpus));
    out
}

type IdempotencySlot = Arc<Mutex<Option<Value>>>;

/// Shared server state. All methods are synchronous; handlers run them on
/// the blocking pool.
pub struct AppState {
    pub fixtures: Fixtures,
    pub engine: Engine,
    pub hub: SessionHub,
    pub store: Option<SessionStore>,
    pub provider: SharedProvider,
    pub provider_config: ProviderConfig,
    idempotency: DashMap<String, IdempotencySlot>,
    hashes: BTreeMap<String, Option<String>>,
    recovery: Vec<Value>,
}

impl AppState {
    /// Builds the state and reloads every session found in the store.
    pub fn new(
        fixtures: Fixtures,
        provider: SharedProvider,
        provider_config: ProviderConfig,
        store: Option<SessionStore>,
    ) -> Result<Self, ConfigError> {
        let engine = fixtures.engine();
        let hub = SessionHub::new();
        let mut recovery = Vec::new();
        if let Some(store) = &store {
            for id in store.ids()? {
                match store.recover(&id, &engine) {
                    Ok(r) => {
                        if let Some(line) = r.corrupt_line {
                            recovery.push(json!({"session": id, "stopped_at_line": line, "needs_review": true}));
                        }
                        hub.insert(r.session);
                    }
                    Err(e) => recovery.push(json!({"session": id, "error": e.to_string()})),
                }
            }
        }
        let hashes = fixture_hashes(&fixtures);
        Ok(Self {
            fixtures,
            engine,
            hub,
            store,
            provider,
            provider_config,
            idempotency: DashMap::new(),
            hashes,
            recovery,
        })
    }

    fn persist(&self, s: &Session) -> Result<(), ApiError> {
        if let Some(store) = &self.store {
            store.save(s)?;
        }
        Ok(())
    }

    /// Runs `f` under the session lock, then persists whatever it changed.
    fn mutate<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let cell = self
            .hub
            .get(id)
            .ok_or_else(|| EngineError::NoSuchSession(id.to_string()))?;
        let mut s = cell.lock();
        let out = f(&mut s);
        self.persist(&s)?;
        out
    }

    fn session_view(&self, s: &Session) -> Value {
        json!({
            "session_id": s.id(),
            "mode": s.mode(),
            "status": s.status,
            "plan": s.header.plan,
            "prompt": self.engine.current_prompt(s).ok(),
        })
    }

    pub fn health(&self) -> Value {
        let lib = &self.fixtures.tools.library;
        json!({
            "status": "ok",
            "version": env!("CARGO_PKG_VERSION"),
            "provider": self.provider.name(),
            "workflows": self.fixtures.registry.len(),
            "library": {"groups": lib.group_count(), "records": lib.record_count()},
            "corpus_chunks": self.fixtures.corpus.chunks().len(),
            "sessions": self.hub.len(),
            "fixtures": self.hashes,
            "recovery": self.recovery,
        })
    }

    pub fn plan_for(&self, req: &CreateSession) -> Result<Option<Plan>, ApiError> {
        let table = self.fixtures.registry.task_table();
        match req.mode {
            Mode::Qa => {
                if req.plan.as_ref().is_some_and(|p| !p.is_empty()) || req.meta_task.is_some() {
                    return Err(ApiError::unprocessable("mode_mismatch", "Q&A sessions take no plan"));
                }
                Ok(None)
            }
            Mode::Meta => match (&req.meta_task, &req.plan) {
                (Some(m), None) => Ok(Some(meta_pipeline(m, table)?)),
                (None, Some(p)) => Ok(Some(validate_plan(p, table)?)),
                (Some(_), Some(_)) => Err(ApiError::unprocessable(
                    "ambiguous_plan",
                    "give either meta_task or plan, not both",
                )),
                (None, None) => Err(ApiError::unprocessable(
                    "missing_plan",
                    "meta sessions need a meta_task or a plan",
                )),
            },
            Mode::Auto => match &req.plan {
                Some(p) => Ok(Some(validate_plan(p, table)?)),
                None => Ok(Some(decompose(
                    &req.request,
                    table,
                    &self.provider,
                    &self.provider_config,
                    self.engine.safety(),
                )?)),
            },
        }
    }

    pub fn create_session(&self, body: &[u8], idempotency_key: Option<String>) -> Result<Value, ApiError> {
        let Some(key) = idempotency_key else {
            return self.create_session_inner(body);
        };
        let slot = self.idempotency.entry(key).or_default().clone();
        let mut guard = slot.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(v) = guard.as_ref() {
            return Ok(v.clone());
        }
        let v = self.create_session_inner(body)?;
        *guard = Some(v.clone());
        Ok(v)
    }

    fn create_session_inner(&self, body: &[u8]) -> Result<Value, ApiError> {
        let req: CreateSession = parse_body(body)?;
        let plan = self.plan_for(&req)?;
        let tasks = plan.as_ref().map(|p| p.tasks.clone()).unwrap_or_default();
        let s = self.engine.start_session(req.mode, &tasks, &req.request)?;
        self.persist(&s)?;
        let mut view = self.session_view(&s);
        view["plan_detail"] = to_value(&plan);
        self.hub.insert(s);
        Ok(view)
    }

    pub fn get_session(&self, id: &str) -> Result<Value, ApiError> {
        let s = self
            .hub
            .snapshot(id)
            .ok_or_else(|| EngineError::NoSuchSession(id.to_string()))?;
        let mut view = self.session_view(&s);
        view["session"] = to_value(&s);
        Ok(view)
    }

    /// A `Q:` message (or any message in a Q&A session) is answered from
    /// the corpus without touching the workflow.
    pub fn post_turn(&self, id: &str, body: &[u8]) -> Result<Value, ApiError> {
        let body: ResponseBody = parse_body(body)?;
        let mode = self
            .hub
            .snapshot(id)
            .map(|s| s.mode())
            .ok_or_else(|| EngineError::NoSuchSession(id.to_string()))?;
        let route = match (mode, route_message(&body.response)) {
            (Mode::Qa, Route::Workflow(q)) => Route::Qa(q),
            (_, r) => r,
        };
        match route {
            Route::Qa(q) => Ok(json!({"route": "qa", "answer": self.answer(&q, DEFAULT_TOP_K)?})),
            Route::Workflow(text) => self.mutate(id, |s| {
                let outcome = self.engine.submit(s, TurnInput::user(text))?;
                Ok(json!({"route": "workflow", "outcome": outcome}))
            }),
        }
    }

    pub fn post_override(&self, id: &str, body: &[u8]) -> Result<Value, ApiError> {
        let body: ResponseBody = parse_body(body)?;
        self.mutate(id, |s| Ok(to_value(&self.engine.submit(s, TurnInput::user(body.response))?)))
    }

    pub fn post_ack(&self, id: &str, body: &[u8]) -> Result<Value, ApiError> {
        let body: AckBody = parse_body(body)?;
        let text = body.acknowledgment.unwrap_or_else(|| "acknowledged".into());
        self.mutate(id, |s| Ok(to_value(&self.engine.acknowledge(s, TurnInput::user(text))?)))
    }

    pub fn post_autopilot(&self, id: &str, body: &[u8]) -> Result<Value, ApiError> {
        let body: AutopilotBody = parse_body(body)?;
        self.mutate(id, |s| {
            let meta = body.meta_prompt.clone().unwrap_or_else(|| s.header.request.clone());
            let limit = body.step_limit.unwrap_or(DEFAULT_STEP_LIMIT);
            let t = run_autopilot(&self.engine, s, &meta, &self.provider, &self.provider_config, limit, None)?;
            Ok(json!({
                "transcript": t,
                "handoff": t.handoff(),
                "status": s.status,
                "prompt": self.engine.current_prompt(s).ok(),
            }))
        })
    }

    pub fn report_json(&self, id: &str) -> Result<String, ApiError> {
        let s = self
            .hub
            .snapshot(id)
            .ok_or_else(|| EngineError::NoSuchSession(id.to_string()))?;
        Ok(self.engine.export_report(&s)?.to_json())
    }

    pub fn answer(&self, question: &str, k: usize) -> Result<Value, ApiError> {
        let a = answer_question(
            question,
            &self.fixtures.corpus,
            &self.provider,
            &self.provider_config,
            self.engine.safety(),
            k,
        )?;
        Ok(to_value(&a))
    }

    pub fn post_qa(&self, body: &[u8]) -> Result<Value, ApiError> {
        let body: QaBody = parse_body(body)?;
        self.answer(&body.question, body.top_k.unwrap_or(DEFAULT_TOP_K).max(1))
    }

    pub fn post_offtarget(&self, body: &[u8]) -> Result<Value, ApiError> {
        let body: OffTargetBody = parse_body(body)?;
        let rule = resolve_pam(body.pam.as_deref(), body.system.as_deref())?;
        let owned;
        let refs: &[Reference] = match &body.reference {
            Some(text) => {
                owned = references_from_text(text)?;
                &owned
            }
            None => &self.fixtures.tools.genome,
        };
        let mm = body.max_mismatches.unwrap_or(DEFAULT_MAX_MISMATCHES);
        let report = off_target_search(&body.spacer, refs, mm, &rule)?;
        Ok(json!({"histogram": report.mismatch_histogram(), "report": report}))
    }

    pub fn post_primers(&self, body: &[u8]) -> Result<Value, ApiError> {
        let body: PrimerBody = parse_body(body)?;
        let reference = match (&body.reference, &body.gene) {
            (Some(text), None) => pick_record(references_from_text(text)?, body.record.as_deref())?,
            (None, Some(gene)) => self
                .fixtures
                .tools
                .loci
                .get(&gene.to_ascii_uppercase())
                .cloned()
                .ok_or_else(|| ApiError::unprocessable("unknown_locus", format!("no loaded locus for `{gene}`")))?,
            _ => return Err(ApiError::unprocessable("invalid_argument", "give exactly one of reference or gene")),
        };
        let constraints = body.constraints.unwrap_or_else(|| self.fixtures.tools.primer_constraints.clone());
        let pairs = design_primers(&reference.sequence, body.target.0..body.target.1, &constraints)?;
        Ok(json!({"reference": reference.id, "pairs": pairs}))
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

type AppResult = Result<Json<Value>, ApiError>;
type Shared = State<Arc<AppState>>;

async fn healthz(State(st): Shared) -> Json<Value> {
    Json(st.health())
}

async fn create_session(State(st): Shared, headers: HeaderMap, body: Bytes) -> Result<(StatusCode, Json<Value>), ApiError> {
    let key = headers
        .get("idempotency-key")
        .and_then(|v| v.to_str().ok())
        .map(str::to_string);
    let v = blocking(move || st.create_session(&body, key)).await?;
    Ok((StatusCode::CREATED, Json(v)))
}

async fn get_session(State(st): Shared, UrlPath(id): UrlPath<String>) -> AppResult {
    blocking(move || st.get_session(&id)).await.map(Json)
}

async fn post_turn(State(st): Shared, UrlPath(id): UrlPath<String>, body: Bytes) -> AppResult {
    blocking(move || st.post_turn(&id, &body)).await.map(Json)
}

async fn post_ack(State(st): Shared, UrlPath(id): UrlPath<String>, body: Bytes) -> AppResult {
    blocking(move || st.post_ack(&id, &body)).await.map(Json)
}

async fn post_autopilot(State(st): Shared, UrlPath(id): UrlPath<String>, body: Bytes) -> AppResult {
    blocking(move || st.post_autopilot(&id, &body)).await.map(Json)
}

async fn post_override(State(st): Shared, UrlPath(id): UrlPath<String>, body: Bytes) -> AppResult {
    blocking(move || st.post_override(&id, &body)).await.map(Json)
}

async fn get_report(State(st): Shared, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let text = blocking(move || st.report_json(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], text).into_response())
}

async fn post_qa(State(st): Shared, body: Bytes) -> AppResult {
    blocking(move || st.post_qa(&body)).await.map(Json)
}

async fn post_offtarget(State(st): Shared, body: Bytes) -> AppResult {
    blocking(move || st.post_offtarget(&body)).await.map(Json)
}

async fn post_primers(State(st): Shared, body: Bytes) -> AppResult {
    blocking(move || st.post_primers(&body)).await.map(Json)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/turns", post(post_turn))
        .route("/sessions/{id}/ack", post(post_ack))
        .route("/sessions/{id}/autopilot", post(post_autopilot))
        .route("/sessions/{id}/override", post(post_override))
        .route("/sessions/{id}/report", get(get_report))
        .route("/qa", post(post_qa))
        .route("/tools/offtarget", post(post_offtarget))
        .route("/tools/primers", post(post_primers))
        .with_state(state)
}

/// Serves `router` on `bind` until ctrl-c.
pub async fn serve(state: Arc<AppState>, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
