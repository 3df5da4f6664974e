#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use crispr_agent::autopilot::{run_autopilot, AutopilotTranscript, HandoffReason, Termination};
use crispr_agent::fixtures::Fixtures;
use crispr_agent::llm::{AuditingProvider, ProviderConfig, Script, ScriptedProvider, SharedProvider};
use crispr_agent::planner::{meta_pipeline, TaskTable};
use crispr_agent::workflow::{Engine, Mode, Session, TurnInput};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixtures() -> &'static Fixtures {
    static F: OnceLock<Fixtures> = OnceLock::new();
    F.get_or_init(|| Fixtures::load_dir(&fixture_dir()).expect("shipped fixtures load"))
}

pub fn engine() -> Engine {
    fixtures().engine()
}

pub fn table() -> &'static TaskTable {
    fixtures().registry.task_table()
}

pub fn script(name: &str) -> Script {
    Script::load(&fixture_dir().join("scripts").join(format!("{name}.json"))).unwrap()
}

/// A scripted provider wrapped in an auditor; the auditor is returned so
/// tests can assert that no payload carried a nucleotide run.
pub fn audited(script: Script) -> (SharedProvider, Arc<AuditingProvider>) {
    let inner: SharedProvider = Arc::new(ScriptedProvider::new(script));
    let audit = Arc::new(AuditingProvider::with_threshold(inner, 20));
    (audit.clone() as SharedProvider, audit)
}

pub fn knockout_plan() -> Vec<String> {
    meta_pipeline("knockout", table()).unwrap().tasks
}

pub const ACK: &str = "I understand the risk; this work does not involve germline editing.";

/// Runs the knockout pipeline under autopilot, confirming the germline
/// warning as the user whenever the agent hands it back.
pub fn knockout_session(gene: &str, provider: &SharedProvider) -> (Engine, Session, Vec<AutopilotTranscript>) {
    let engine = engine();
    let request = format!("knockout {gene} in human A375 cells");
    let mut s = engine.start_session(Mode::Meta, &knockout_plan(), &request).unwrap();
    let mut transcripts = Vec::new();
    for _ in 0..5 {
        let t = run_autopilot(&engine, &mut s, &request, provider, &ProviderConfig::default(), 50, None).unwrap();
        let done = t.termination != Termination::Handoff;
        let needs_ack = t.handoff() == Some(HandoffReason::AcknowledgmentRequired);
        transcripts.push(t);
        if done {
            break;
        }
        assert!(needs_ack, "unexpected handoff: {:?}", transcripts.last());
        engine.acknowledge(&mut s, TurnInput::user(ACK).at(0)).unwrap();
    }
    (engine, s, transcripts)
}
