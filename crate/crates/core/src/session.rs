//! Reader navigation state: which view a reader sees, how they got there,
//! and the payload served back after every action.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::DrillboardDocument;
use crate::hierarchy::{check_view, drill_down, roll_up, top_view, HierarchyError, View};
use crate::layout::{
    assign_subtree_colors, auto_rollup, decorate_frames, layout_view, CardFrame, LayoutConfig,
    LayoutError, LayoutMode, Viewport,
};
use crate::model::NodeId;
use crate::render::{tree_payload, view_cards, CardSpec, TreeNode};

pub const DEFAULT_VIEWPORT: Viewport = Viewport {
    width: 1280.0,
    height: 800.0,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Action {
    #[serde(rename_all = "camelCase")]
    Drill { node_id: NodeId },
    #[serde(rename_all = "camelCase")]
    Roll { node_id: NodeId },
    Jump { view: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HistoryEntry {
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionState {
    pub session_id: String,
    pub document_id: String,
    pub document_revision: u64,
    pub current_view: View,
    /// View the reader opened or last jumped to; depth labels count from here.
    pub base_view: View,
    pub drill_history: Vec<HistoryEntry>,
    pub viewport: Viewport,
}

impl SessionState {
    /// Piles drilled since the last jump, oldest first.
    pub fn drilled_since_jump(&self) -> Vec<NodeId> {
        let start = self
            .drill_history
            .iter()
            .rposition(|e| matches!(e.action, Action::Jump { .. }))
            .map_or(0, |i| i + 1);
        self.drill_history[start..]
            .iter()
            .filter_map(|e| match &e.action {
                Action::Drill { node_id } => Some(node_id.clone()),
                _ => None,
            })
            .collect()
    }
}

/// Opens a session on `label`, or on the top view when no label is given.
pub fn open_session(
    doc: &DrillboardDocument,
    session_id: &str,
    label: Option<&str>,
    viewport: Option<Viewport>,
) -> Result<SessionState, SessionError> {
    let view = match label {
        Some(l) => doc.resolve_view(l)?,
        None => top_view(&doc.hierarchy),
    };
    check_view(&doc.hierarchy, &view)?;
    Ok(SessionState {
        session_id: session_id.to_string(),
        document_id: doc.id.clone(),
        document_revision: doc.revision,
        current_view: view.clone(),
        base_view: view,
        drill_history: Vec::new(),
        viewport: viewport.unwrap_or(DEFAULT_VIEWPORT),
    })
}

fn fit(doc: &DrillboardDocument, state: &SessionState, view: View, focus: Option<&NodeId>) -> View {
    match doc.layout.mode {
        LayoutMode::SpaceFilling => {
            auto_rollup(&doc.hierarchy, &view, state.viewport, &doc.layout, focus)
        }
        LayoutMode::Fixed { .. } => view,
    }
}

/// Applies one reader action. `doc` must be the revision the session pinned.
pub fn apply_action(
    doc: &DrillboardDocument,
    state: &SessionState,
    action: &Action,
) -> Result<SessionState, SessionError> {
    let h = &doc.hierarchy;
    let mut next = state.clone();
    match action {
        Action::Drill { node_id } => {
            let v = drill_down(h, &state.current_view, node_id)?;
            next.current_view = fit(doc, state, v, Some(node_id));
        }
        Action::Roll { node_id } => {
            next.current_view = roll_up(h, &state.current_view, node_id)?;
        }
        Action::Jump { view } => {
            let v = doc.resolve_view(view)?;
            let v = fit(doc, state, v, None);
            next.base_view = v.clone();
            next.current_view = v;
        }
    }
    next.drill_history.push(HistoryEntry {
        action: action.clone(),
    });
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionPayload {
    pub session_id: String,
    pub view: Vec<NodeId>,
    pub frames: Vec<CardFrame>,
    pub tree: Vec<TreeNode>,
    pub colors: BTreeMap<NodeId, u8>,
    pub cards: Vec<CardSpec>,
    pub labels: Vec<String>,
    pub revision: u64,
    pub revision_stale: bool,
    /// True when cards had to go below the configured minimum size.
    pub cramped: bool,
}

/// Everything a client needs to draw the session's current state.
pub fn session_payload(
    doc: &DrillboardDocument,
    state: &SessionState,
    latest_revision: u64,
) -> Result<SessionPayload, SessionError> {
    let h = &doc.hierarchy;
    let v = &state.current_view;
    let (mut frames, cramped) = match layout_view(h, v, state.viewport, &doc.layout) {
        Ok(f) => (f, false),
        Err(LayoutError::ViewportTooSmall { .. }) => {
            let relaxed = LayoutConfig {
                mode: LayoutMode::SpaceFilling,
                min_card_width: 0.0,
                min_card_height: 0.0,
                ..doc.layout.clone()
            };
            (layout_view(h, v, state.viewport, &relaxed)?, true)
        }
        Err(e) => return Err(e.into()),
    };
    let colors = assign_subtree_colors(h, v, &state.drilled_since_jump());
    decorate_frames(h, &mut frames, &state.base_view, &colors);
    Ok(SessionPayload {
        session_id: state.session_id.clone(),
        view: v.members.clone(),
        frames,
        tree: tree_payload(h, v),
        colors,
        cards: view_cards(h, v),
        labels: doc.view_labels(),
        revision: state.document_revision,
        revision_stale: latest_revision > state.document_revision,
        cramped,
    })
}
