mod common;

use common::*;
use crispr_agent::autopilot::{agent_step, run_autopilot, HandoffReason, Termination};
use crispr_agent::llm::{ProviderConfig, ScriptEntry, ScriptedProvider, SharedProvider};
use crispr_agent::planner::MetaTask;
use crispr_agent::workflow::{gate_violations, EngineError, Mode, Responder, Status, TurnInput, TurnKind};
use std::sync::Arc;

#[test]
fn shipped_registry_is_clean() {
    let f = fixtures();
    assert!(f.registry.warnings.is_empty(), "{:?}", f.registry.warnings);
    assert_eq!(f.registry.len(), 24);
    for def in f.registry.machines() {
        assert!(gate_violations(def).is_empty());
    }
    for m in MetaTask::ALL {
        assert!(table().pipeline(m).is_some());
    }
}

#[test]
fn knockout_autopilot_completes_for_each_gene() {
    for gene in ["TGFBR1", "SNAI1", "BAX", "BCL2L1"] {
        let (provider, audit) = audited(script("knockout_autopilot"));
        let (engine, s, transcripts) = knockout_session(gene, &provider);
        assert_eq!(transcripts.last().unwrap().termination, Termination::Completed);
        let report = engine.export_report(&s).unwrap();
        assert_eq!(report.guides.as_array().unwrap().len(), 4, "{gene}");
        assert!(report.guides[0]["spacer"].as_str().unwrap().len() == 23);
        assert!(!report.primers["pairs"].as_array().unwrap().is_empty());
        assert!(report.protocol["reference"].as_str().unwrap().contains("2014"));
        assert_eq!(report.acknowledgments.len(), 1);
        assert_eq!(audit.leaks(), 0);
    }
}

#[test]
fn requests_sequence_hands_off_without_a_provider_call() {
    let engine = engine();
    let plan = vec!["off_target.StateStep1".to_string()];
    let mut s = engine.start_session(Mode::Meta, &plan, "check a spacer").unwrap();
    engine.submit(&mut s, TurnInput::user("Enter a sequence")).unwrap();
    let scripted = Arc::new(ScriptedProvider::strict(vec![]));
    let provider: SharedProvider = scripted.clone();
    let d = agent_step(&engine, &s, "", &provider, &ProviderConfig::default()).unwrap();
    assert_eq!(d.handoff_reason(), Some(HandoffReason::RequestsSequence));
    assert_eq!(scripted.call_count(), 0);
    assert_eq!(s.status, Status::AwaitingInput);
}

#[test]
fn invalid_choice_twice_hands_off() {
    let engine = engine();
    let plan = vec!["knockout.StateStep1".to_string()];
    let mut s = engine.start_session(Mode::Auto, &plan, "knockout").unwrap();
    let provider: SharedProvider = Arc::new(ScriptedProvider::strict(vec![
        ScriptEntry::new(&["[state: knockout.StateStep1]"], r#"{"Thoughts":"t","Answer":"Cas13"}"#).repeating(),
    ]));
    let t = run_autopilot(&engine, &mut s, "multiplexed, low off-target", &provider, &ProviderConfig::default(), 5, None)
        .unwrap();
    assert_eq!(t.handoff(), Some(HandoffReason::InvalidAfterRetry));
    assert!(s.history.is_empty());
}

#[test]
fn override_is_recorded_as_user() {
    let engine = engine();
    let plan = vec!["knockout.StateStep1".to_string()];
    let mut s = engine.start_session(Mode::Auto, &plan, "knockout").unwrap();
    let provider: SharedProvider = Arc::new(ScriptedProvider::new(script("knockout_autopilot")));
    let mut hook = |_: &_, _: &_| Some("Cas9".to_string());
    let t = run_autopilot(&engine, &mut s, "", &provider, &ProviderConfig::default(), 5, Some(&mut hook)).unwrap();
    assert_eq!(t.termination, Termination::Completed);
    assert_eq!(t.entries[0].overridden_with.as_deref(), Some("Cas9"));
    assert_eq!(s.history[0].responder, Responder::User);
    assert_eq!(s.artifact_text("cas_system"), Some("SpCas9"));
}

#[test]
fn step_limit_stops_after_one_turn() {
    let engine = engine();
    let mut s = engine.start_session(Mode::Meta, &knockout_plan(), "knockout TGFBR1 in human A375").unwrap();
    let provider: SharedProvider = Arc::new(ScriptedProvider::new(script("knockout_autopilot")));
    let t = run_autopilot(&engine, &mut s, "", &provider, &ProviderConfig::default(), 1, None).unwrap();
    assert_eq!(t.termination, Termination::StepLimit);
    assert_eq!(s.history.len(), 1);
    assert_eq!(s.history[0].responder, Responder::Autopilot);
    assert!(s.history[0].reasoning.is_some());
}

#[test]
fn human_session_blocks_until_acknowledged() {
    let engine = engine();
    let plan = vec!["knockout.StateStep1".to_string(), "knockout.StateStep3".to_string()];
    let mut s = engine.start_session(Mode::Auto, &plan, "design sgRNA to knockout human EGFR").unwrap();
    assert_eq!(s.artifact_text("gene"), Some("EGFR"));
    engine.submit(&mut s, TurnInput::user("Cas9")).unwrap();
    let p = engine.current_prompt(&s).unwrap();
    assert_eq!(p.warnings.len(), 1);
    engine.submit(&mut s, TurnInput::user("human")).unwrap();
    assert_eq!(s.status, Status::AwaitingAck);
    assert_eq!(engine.submit(&mut s, TurnInput::user("EGFR")).unwrap_err(), EngineError::AckRequired);
    assert_eq!(
        engine.acknowledge(&mut s, TurnInput::autopilot("yes", "t")).unwrap_err(),
        EngineError::AckRequiresUser
    );
    engine.submit(&mut s, TurnInput::user("yes, I understand")).unwrap();
    assert_eq!(s.status, Status::AwaitingInput);
    engine.submit(&mut s, TurnInput::user("")).unwrap();
    let out = engine.submit(&mut s, TurnInput::user("")).unwrap();
    assert_eq!(out.status, Status::Completed);
    assert_eq!(s.artifact("guides").unwrap().as_array().unwrap().len(), 4);
    assert!(s.history.iter().any(|t| t.kind == TurnKind::Acknowledgment));
}

