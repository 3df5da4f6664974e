use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use std::sync::mpsc;
use std::sync::Arc;
use std::time::Duration;
use thiserror::Error;

use super::prompts::PromptBundle;
use super::GatewayError;
use crate::safety::{scan_nucleotide_runs, SafetyConfig};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    #[error("provider transport error: {0}")]
    Transport(String),
    #[error("provider timed out")]
    Timeout,
    #[error("no script entry matches the prompt: {0}")]
    ScriptMiss(String),
}

/// A text-in, text-out completion endpoint.
pub trait CompletionProvider: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError>;

    fn name(&self) -> &str {
        "provider"
    }
}

pub type SharedProvider = Arc<dyn CompletionProvider>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    /// Sampling temperature sent to live providers; 0 is the most deterministic.
    pub temperature: f64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: "gpt-4o".into(),
            timeout_secs: 60.0,
            max_retries: 2,
            temperature: 0.0,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if !self.timeout_secs.is_finite() || self.timeout_secs <= 0.0 {
            return Err(GatewayError::Config("timeout must be positive".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

/// Sends `bundle` to `provider`. Transport failures and timeouts are retried
/// up to `config.max_retries` times; each attempt is bounded by the timeout.
pub fn complete(bundle: &PromptBundle, provider: &SharedProvider, config: &ProviderConfig) -> Result<String, GatewayError> {
    config.validate()?;
    // Bundles are filter-checked at construction; re-check in case one was
    // assembled by hand.
    let findings = scan_nucleotide_runs(&bundle.filled_text, bundle.filter_threshold);
    if !findings.is_empty() {
        return Err(GatewayError::FilterBlocked {
            field: "prompt".into(),
            message: "prompt contains a nucleotide run".into(),
            findings,
        });
    }
    let mut last = ProviderError::Transport("no attempt made".into());
    for _ in 0..=config.max_retries {
        match call_with_timeout(provider, &bundle.filled_text, config.timeout()) {
            Ok(text) => return Ok(text),
            Err(e @ ProviderError::ScriptMiss(_)) => return Err(e.into()),
            Err(e) => last = e,
        }
    }
    Err(last.into())
}

fn call_with_timeout(provider: &SharedProvider, prompt: &str, timeout: Duration) -> Result<String, ProviderError> {
    let (tx, rx) = mpsc::channel();
    let p = Arc::clone(provider);
    let prompt = prompt.to_string();
    std::thread::spawn(move || {
        let _ = tx.send(p.complete(&prompt));
    });
    match rx.recv_timeout(timeout) {
        Ok(r) => r,
        Err(mpsc::RecvTimeoutError::Timeout) => Err(ProviderError::Timeout),
        Err(mpsc::RecvTimeoutError::Disconnected) => Err(ProviderError::Transport("provider thread panicked".into())),
    }
}

/// Wraps a provider and records every payload it receives, flagging any
/// that carries a nucleotide run at or above the threshold.
pub struct AuditingProvider {
    inner: SharedProvider,
    threshold: usize,
    log: Mutex<AuditLog>,
}

#[derive(Debug, Clone, Default)]
pub struct AuditLog {
    pub payloads: Vec<String>,
    pub leaks: usize,
}

impl AuditingProvider {
    pub fn new(inner: SharedProvider) -> Self {
        Self::with_threshold(inner, SafetyConfig::default().threshold)
    }

    pub fn with_threshold(inner: SharedProvider, threshold: usize) -> Self {
        Self {
            inner,
            threshold,
            log: Mutex::new(AuditLog::default()),
        }
    }

    pub fn log(&self) -> AuditLog {
        self.log.lock().clone()
    }

    pub fn calls(&self) -> usize {
        self.log.lock().payloads.len()
    }

    pub fn leaks(&self) -> usize {
        self.log.lock().leaks
    }
}

impl CompletionProvider for AuditingProvider {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        {
            let mut log = self.log.lock();
            if !scan_nucleotide_runs(prompt, self.threshold).is_empty() {
                log.leaks += 1;
            }
            log.payloads.push(prompt.to_string());
        }
        self.inner.complete(prompt)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::prompts::{PromptBundle, TemplateId};
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Failing(AtomicUsize);
    impl CompletionProvider for Failing {
        fn complete(&self, _: &str) -> Result<String, ProviderError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Err(ProviderError::Transport("connection refused".into()))
        }
    }

    struct Slow;
    impl CompletionProvider for Slow {
        fn complete(&self, _: &str) -> Result<String, ProviderError> {
            std::thread::sleep(Duration::from_millis(300));
            Ok("late".into())
        }
    }

    fn bundle(text: &str) -> PromptBundle {
        PromptBundle {
            template_id: TemplateId::Autopilot,
            filled_text: text.into(),
            placeholders: Default::default(),
            filter_threshold: 20,
        }
    }

    #[test]
    fn retries_then_transport_error() {
        let failing = Arc::new(Failing(AtomicUsize::new(0)));
        let provider: SharedProvider = failing.clone();
        let cfg = ProviderConfig {
            max_retries: 2,
            ..Default::default()
        };
        let err = complete(&bundle("hello"), &provider, &cfg).unwrap_err();
        assert!(matches!(err, GatewayError::ProviderTransport(_)));
        assert_eq!(failing.0.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn timeout_bounds_latency() {
        let provider: SharedProvider = Arc::new(Slow);
        let cfg = ProviderConfig {
            timeout_secs: 0.05,
            max_retries: 1,
            ..Default::default()
        };
        let t = std::time::Instant::now();
        let err = complete(&bundle("hello"), &provider, &cfg).unwrap_err();
        assert_eq!(err, GatewayError::ProviderTimeout);
        assert!(t.elapsed() < Duration::from_millis(250));
    }

    #[test]
    fn refuses_unfiltered_bundle() {
        let failing = Arc::new(Failing(AtomicUsize::new(0)));
        let provider: SharedProvider = failing.clone();
        let err = complete(&bundle("GACTATCATATGCTTACCGT"), &provider, &ProviderConfig::default()).unwrap_err();
        assert!(matches!(err, GatewayError::FilterBlocked { .. }));
        assert_eq!(failing.0.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn invalid_timeout() {
        let provider: SharedProvider = Arc::new(Slow);
        let cfg = ProviderConfig {
            timeout_secs: 0.0,
            ..Default::default()
        };
        assert!(matches!(complete(&bundle("x"), &provider, &cfg), Err(GatewayError::Config(_))));
    }

    #[test]
    fn auditing_counts_leaks() {
        let inner: SharedProvider = Arc::new(Slow);
        let audit = AuditingProvider::new(inner);
        let _ = audit.complete("clean");
        let _ = audit.complete("ACGT ACGT ACGT ACGT ACGT");
        assert_eq!(audit.calls(), 2);
        assert_eq!(audit.leaks(), 1);
    }
}
