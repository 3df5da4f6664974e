use dashmap::DashMap;
use parking_lot::Mutex;
use std::sync::Arc;

use super::session::Session;
use super::EngineError;

/// Live sessions keyed by id. Each session sits behind its own lock so
/// writers to one session are serialized while others proceed.
#[derive(Debug, Default)]
pub struct SessionHub {
    sessions: DashMap<String, Arc<Mutex<Session>>>,
}

impl SessionHub {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&self, session: Session) -> Arc<Mutex<Session>> {
        let id = session.id().to_string();
        let cell = Arc::new(Mutex::new(session));
        self.sessions.insert(id, Arc::clone(&cell));
        cell
    }

    pub fn get(&self, id: &str) -> Option<Arc<Mutex<Session>>> {
        self.sessions.get(id).map(|e| Arc::clone(e.value()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.sessions.contains_key(id)
    }

    /// Runs `f` with exclusive access to the session.
    pub fn with<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> T) -> Result<T, EngineError> {
        let cell = self.get(id).ok_or_else(|| EngineError::NoSuchSession(id.to_string()))?;
        let mut guard = cell.lock();
        Ok(f(&mut guard))
    }

    /// A copy of the session taken under its lock.
    pub fn snapshot(&self, id: &str) -> Option<Session> {
        self.get(id).map(|c| c.lock().clone())
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.iter().map(|e| e.key().clone()).collect();
        ids.sort();
        ids
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }
}
