//! Replayable merge scripts for building a drillboard without the GUI.
//!
//! ```json
//! { "title": "Funds",
//!   "steps": [
//!     {"op": "summarize", "arithmetic": "add", "nodes": ["atom-1", "atom-2"], "title": "Total"},
//!     {"op": "archetype", "chosen": "atom-3", "nodes": ["atom-3", "atom-4"], "saveViewAfter": "expert"}
//!   ],
//!   "views": [{"label": "overview", "members": ["pile-1", "pile-2"]}] }
//! ```
//!
//! `saveViewAfter` stores the author's working view (the current roots)
//! once the step is applied.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::Merge;
use crate::document::{DocumentError, DrillboardDocument, Mutation};
use crate::hierarchy::{top_view, View};
use crate::ingest::DataTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScriptStep {
    #[serde(flatten)]
    pub merge: Merge,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub save_view_after: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MergeScript {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub steps: Vec<ScriptStep>,
    #[serde(default)]
    pub views: Vec<crate::hierarchy::PredefinedView>,
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("step {step}: {source}")]
    Step { step: usize, source: DocumentError },
    #[error("view `{label}`: {source}")]
    View { label: String, source: DocumentError },
    #[error(transparent)]
    Setup(DocumentError),
}

/// Builds a document with one atom per table feature (`atom-1`, ... in
/// column order) and replays `script` over it.
pub fn build_document(table: DataTable, script: &MergeScript) -> Result<DrillboardDocument, ScriptError> {
    let id = script.id.clone().unwrap_or_else(|| table.id.clone());
    let title = script.title.clone().unwrap_or_else(|| table.id.clone());
    let doc = DrillboardDocument::from_table(&id, &title, table).map_err(ScriptError::Setup)?;
    replay(doc, script)
}

/// Replays `script` on an existing document.
pub fn replay(mut doc: DrillboardDocument, script: &MergeScript) -> Result<DrillboardDocument, ScriptError> {
    for (i, step) in script.steps.iter().enumerate() {
        let step_no = i + 1;
        let (next, _) = doc
            .apply(&Mutation::Merge(step.merge.clone()))
            .map_err(|source| ScriptError::Step { step: step_no, source })?;
        doc = next;
        if let Some(label) = &step.save_view_after {
            doc = doc
                .define_view(label, top_view(&doc.hierarchy))
                .map_err(|source| ScriptError::Step { step: step_no, source })?;
        }
    }
    for v in &script.views {
        doc = doc
            .define_view(&v.label, View::new(v.view.members.iter().cloned()))
            .map_err(|source| ScriptError::View {
                label: v.label.clone(),
                source,
            })?;
    }
    Ok(doc)
}
