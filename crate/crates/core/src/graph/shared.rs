use std::sync::{Arc, Mutex, RwLock};

use super::KnowledgeGraph;
use crate::error::Result;

/// Single-writer, multi-reader access with snapshot semantics.
///
/// Readers take an `Arc` to an immutable version. A writer clones the
/// current version, mutates the clone, and publishes it in one swap, so
/// readers observe either the old or the new graph, never a partial
/// update.
#[derive(Debug)]
pub struct SharedGraph {
    current: RwLock<Arc<KnowledgeGraph>>,
    writer: Mutex<()>,
}

impl SharedGraph {
    pub fn new(graph: KnowledgeGraph) -> Self {
        SharedGraph {
            current: RwLock::new(Arc::new(graph)),
            writer: Mutex::new(()),
        }
    }

    pub fn snapshot(&self) -> Arc<KnowledgeGraph> {
        Arc::clone(&self.current.read().expect("poisoned"))
    }

    /// Applies `f` to a private copy and publishes it if `f` succeeds.
    pub fn update<T>(&self, f: impl FnOnce(&mut KnowledgeGraph) -> Result<T>) -> Result<T> {
        let _guard = self.writer.lock().expect("poisoned");
        let mut next = (*self.snapshot()).clone();
        let out = f(&mut next)?;
        *self.current.write().expect("poisoned") = Arc::new(next);
        Ok(out)
    }
}
