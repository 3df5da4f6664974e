#![allow(dead_code)]

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::Value;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};
use tower::ServiceExt;

use crispr_agent::fixtures::Fixtures;
use crispr_agent::llm::{AuditingProvider, ProviderConfig, Script, ScriptedProvider, SharedProvider};
use crispr_agent_service::api::{router, AppState};
use crispr_agent_service::store::SessionStore;

pub const ACK: &str = "I understand the risk; this work does not involve germline editing.";

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixtures() -> &'static Fixtures {
    static F: OnceLock<Fixtures> = OnceLock::new();
    F.get_or_init(|| Fixtures::load_dir(&fixture_dir()).expect("shipped fixtures load"))
}

pub fn script(name: &str) -> Script {
    Script::load(&fixture_dir().join("scripts").join(format!("{name}.json"))).unwrap()
}

pub fn audited(script: Script) -> (SharedProvider, Arc<AuditingProvider>) {
    let inner: SharedProvider = Arc::new(ScriptedProvider::new(script));
    let audit = Arc::new(AuditingProvider::with_threshold(inner, 20));
    (audit.clone() as SharedProvider, audit)
}

pub fn state(provider: SharedProvider, store: Option<&std::path::Path>) -> Arc<AppState> {
    let store = store.map(|p| SessionStore::open(p).unwrap());
    Arc::new(AppState::new(fixtures().clone(), provider, ProviderConfig::default(), store).unwrap())
}

pub async fn call(st: &Arc<AppState>, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    call_with(st, method, uri, body, &[]).await
}

pub async fn call_with(
    st: &Arc<AppState>,
    method: &str,
    uri: &str,
    body: Option<Value>,
    headers: &[(&str, &str)],
) -> (StatusCode, Value) {
    let (status, text) = call_raw(st, method, uri, body, headers).await;
    let v = if text.is_empty() { Value::Null } else { serde_json::from_str(&text).unwrap() };
    (status, v)
}

pub async fn call_raw(
    st: &Arc<AppState>,
    method: &str,
    uri: &str,
    body: Option<Value>,
    headers: &[(&str, &str)],
) -> (StatusCode, String) {
    let mut req = Request::builder().method(method).uri(uri);
    for (k, v) in headers {
        req = req.header(*k, *v);
    }
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = router(Arc::clone(st)).oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

use crispr_agent::planner::MetaTask;
use crispr_agent::workflow::{Engine, Mode, SafetyTag, Session, Status, TurnInput, Validator};
use rand::Rng;

fn random_dna(rng: &mut impl Rng, n: usize) -> String {
    (0..n).map(|_| b"ACGT"[rng.random_range(0..4)] as char).collect()
}

/// A session on a random meta pipeline, ready for [`random_step`].
pub fn random_session(engine: &Engine, rng: &mut impl Rng) -> Session {
    let meta = MetaTask::ALL[rng.random_range(0..MetaTask::ALL.len())];
    let plan = crispr_agent::planner::meta_pipeline(meta.as_str(), engine.registry().task_table()).unwrap();
    engine.start_session(Mode::Meta, &plan.tasks, "randomized session").unwrap()
}

/// Plays one user turn with a mix of valid and invalid answers. Errors are
/// part of the exercise; the engine records rejected turns itself.
pub fn random_step(engine: &Engine, s: &mut Session, rng: &mut impl Rng) {
    if s.status == Status::AwaitingAck {
        let text = if rng.random_bool(0.85) { ACK } else { "hmm, not sure" };
        let _ = engine.acknowledge(s, TurnInput::user(text));
        return;
    }
    let Ok(prompt) = engine.current_prompt(s) else { return };
    let validator = engine
        .registry()
        .state(&prompt.state_id)
        .map(|(_, st)| st.validator.clone())
        .unwrap_or_default();
    let response = if !prompt.input.options.is_empty() {
        if rng.random_bool(0.1) {
            "zzz".to_string()
        } else {
            prompt.input.options[rng.random_range(0..prompt.input.options.len())].clone()
        }
    } else if prompt.input.kind == "none" {
        "continue".to_string()
    } else if prompt.tags.contains(&SafetyTag::OrganismCheckpoint) {
        ["human", "HEK293T cells", "mouse", "human"][rng.random_range(0..4)].to_string()
    } else {
        match validator {
            Validator::NucleotideSequence { min_len, max_len } => {
                let hi = max_len.min(min_len + 250);
                let n = if rng.random_bool(0.1) { min_len.saturating_sub(3) } else { rng.random_range(min_len..=hi) };
                random_dna(rng, n)
            }
            Validator::GeneSymbol => ["TGFBR1", "SNAI1", "BAX", "BCL2L1", "EGFR", "not a gene!"][rng.random_range(0..6)].to_string(),
            Validator::Any => "no particular preference".to_string(),
        }
    };
    let _ = engine.submit(s, TurnInput::user(response));
}
