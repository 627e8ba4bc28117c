//! In-memory document registry and reader sessions.
//!
//! Every document revision is an immutable `Arc` snapshot. Author mutations
//! on one document are serialized by a per-document writer lock; readers
//! never block on it. A session pins the snapshot it was opened on, so later
//! revisions cannot invalidate its view.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use drillboards_core::aggregation::{applicable_ops, OpAvailability};
use drillboards_core::document::{
    save_document, DocumentError, DrillboardDocument, Mutation, MutationOutcome,
};
use drillboards_core::layout::Viewport;
use drillboards_core::model::NodeId;
use drillboards_core::session::{
    apply_action, open_session, session_payload, Action, SessionError, SessionPayload,
    SessionState,
};
use parking_lot::{Mutex, RwLock};
use thiserror::Error;

pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(60 * 60);

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown drillboard `{0}`")]
    UnknownDocument(String),
    #[error("unknown or expired session `{0}`")]
    UnknownSession(String),
    #[error("drillboard `{0}` is already registered")]
    DuplicateDocument(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("could not persist `{path}`: {source}")]
    Persist {
        path: PathBuf,
        source: std::io::Error,
    },
}

struct DocumentSlot {
    current: RwLock<Arc<DrillboardDocument>>,
    writer: Mutex<()>,
    /// Written back after every mutation when set.
    path: Option<PathBuf>,
}

struct SessionEntry {
    state: SessionState,
    doc: Arc<DrillboardDocument>,
    last_used: Instant,
}

/// Summary row for the drillboard listing.
#[derive(Debug, Clone, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoardSummary {
    pub id: String,
    pub title: String,
    pub views: Vec<String>,
    pub revision: u64,
    pub read_only: bool,
}

pub struct Store {
    docs: RwLock<BTreeMap<String, Arc<DocumentSlot>>>,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionEntry>>>>,
    ttl: Duration,
}

impl Default for Store {
    fn default() -> Self {
        Store::new(DEFAULT_SESSION_TTL)
    }
}

impl Store {
    pub fn new(session_ttl: Duration) -> Self {
        Store {
            docs: RwLock::new(BTreeMap::new()),
            sessions: Mutex::new(HashMap::new()),
            ttl: session_ttl,
        }
    }

    /// Registers a document. With `path`, mutations are saved back to it.
    pub fn insert(&self, doc: DrillboardDocument, path: Option<PathBuf>) -> Result<(), StoreError> {
        let mut docs = self.docs.write();
        if docs.contains_key(&doc.id) {
            return Err(StoreError::DuplicateDocument(doc.id));
        }
        docs.insert(
            doc.id.clone(),
            Arc::new(DocumentSlot {
                current: RwLock::new(Arc::new(doc)),
                writer: Mutex::new(()),
                path,
            }),
        );
        Ok(())
    }

    fn slot(&self, id: &str) -> Result<Arc<DocumentSlot>, StoreError> {
        self.docs
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownDocument(id.to_string()))
    }

    /// The latest revision of a document.
    pub fn document(&self, id: &str) -> Result<Arc<DrillboardDocument>, StoreError> {
        Ok(self.slot(id)?.current.read().clone())
    }

    pub fn list(&self) -> Vec<BoardSummary> {
        self.docs
            .read()
            .values()
            .map(|slot| {
                let d = slot.current.read();
                BoardSummary {
                    id: d.id.clone(),
                    title: d.title.clone(),
                    views: d.view_labels(),
                    revision: d.revision,
                    read_only: d.read_only,
                }
            })
            .collect()
    }

    pub fn applicable(&self, id: &str, nodes: &[NodeId]) -> Result<OpAvailability, StoreError> {
        let doc = self.document(id)?;
        applicable_ops(&doc.hierarchy, nodes, &doc.layout.aggregation)
            .map_err(|e| StoreError::Document(e.into()))
    }

    /// Applies an author mutation under the document's writer lock.
    pub fn mutate(&self, id: &str, mutation: &Mutation) -> Result<MutationOutcome, StoreError> {
        let slot = self.slot(id)?;
        let _writer = slot.writer.lock();
        let base = slot.current.read().clone();
        let (next, outcome) = base.apply(mutation)?;
        if let Some(path) = &slot.path {
            std::fs::write(path, save_document(&next)).map_err(|source| StoreError::Persist {
                path: path.clone(),
                source,
            })?;
        }
        *slot.current.write() = Arc::new(next);
        tracing::info!(document = id, revision = outcome.revision, "mutation applied");
        Ok(outcome)
    }

    /// Drops idle sessions. Sessions busy in another request are kept.
    fn purge_expired(&self, sessions: &mut HashMap<String, Arc<Mutex<SessionEntry>>>) {
        let ttl = self.ttl;
        sessions.retain(|_, s| s.try_lock().is_none_or(|e| e.last_used.elapsed() < ttl));
    }

    fn entry(&self, sid: &str) -> Result<Arc<Mutex<SessionEntry>>, StoreError> {
        let mut sessions = self.sessions.lock();
        self.purge_expired(&mut sessions);
        sessions
            .get(sid)
            .cloned()
            .ok_or_else(|| StoreError::UnknownSession(sid.to_string()))
    }

    fn payload(&self, entry: &SessionEntry) -> Result<SessionPayload, StoreError> {
        let latest = self.document(&entry.state.document_id)?.revision;
        Ok(session_payload(&entry.doc, &entry.state, latest)?)
    }

    /// Opens a reader session on the latest revision.
    pub fn open_session(
        &self,
        doc_id: &str,
        view: Option<&str>,
        viewport: Option<Viewport>,
    ) -> Result<SessionPayload, StoreError> {
        let doc = self.document(doc_id)?;
        let sid = uuid::Uuid::new_v4().to_string();
        let state = open_session(&doc, &sid, view, viewport)?;
        let entry = SessionEntry {
            state,
            doc,
            last_used: Instant::now(),
        };
        let payload = self.payload(&entry)?;
        let mut sessions = self.sessions.lock();
        self.purge_expired(&mut sessions);
        sessions.insert(sid, Arc::new(Mutex::new(entry)));
        Ok(payload)
    }

    pub fn session(&self, sid: &str) -> Result<SessionPayload, StoreError> {
        let entry = self.entry(sid)?;
        let mut entry = entry.lock();
        entry.last_used = Instant::now();
        self.payload(&entry)
    }

    /// Applies a reader action. A failed action leaves the session unchanged.
    pub fn act(&self, sid: &str, action: &Action) -> Result<SessionPayload, StoreError> {
        let entry = self.entry(sid)?;
        let mut entry = entry.lock();
        entry.last_used = Instant::now();
        let next = apply_action(&entry.doc, &entry.state, action)?;
        entry.state = next;
        self.payload(&entry)
    }

    pub fn session_count(&self) -> usize {
        let mut sessions = self.sessions.lock();
        self.purge_expired(&mut sessions);
        sessions.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use drillboards_core::aggregation::{Merge, MergeOp};
    use drillboards_core::ingest::{parse_table, TableFormat};

    fn doc() -> DrillboardDocument {
        let t = parse_table("t", b"year,a,b,c\n2000,1,2,3\n", TableFormat::Csv, 1).unwrap();
        DrillboardDocument::from_table("d", "D", t).unwrap()
    }

    #[test]
    fn sessions_pin_their_revision() {
        let store = Store::default();
        store.insert(doc(), None).unwrap();
        let p = store.open_session("d", None, None).unwrap();
        assert_eq!(p.view.len(), 3);
        let out = store
            .mutate("d", &Mutation::Merge(Merge::new(MergeOp::Juxtapose, ["atom-1", "atom-2"])))
            .unwrap();
        assert_eq!(out.revision, 1);
        let again = store.session(&p.session_id).unwrap();
        assert_eq!(again.view.len(), 3);
        assert!(again.revision_stale);
        let fresh = store.open_session("d", None, None).unwrap();
        assert_eq!(fresh.view.len(), 2);
        assert!(!fresh.revision_stale);
    }

    #[test]
    fn idle_sessions_expire() {
        let store = Store::new(Duration::ZERO);
        store.insert(doc(), None).unwrap();
        let p = store.open_session("d", None, None).unwrap();
        assert!(matches!(store.session(&p.session_id), Err(StoreError::UnknownSession(_))));
        assert_eq!(store.session_count(), 0);
    }

    #[test]
    fn duplicate_and_unknown_documents() {
        let store = Store::default();
        store.insert(doc(), None).unwrap();
        assert!(matches!(store.insert(doc(), None), Err(StoreError::DuplicateDocument(_))));
        assert!(matches!(store.document("nope"), Err(StoreError::UnknownDocument(_))));
    }
}
