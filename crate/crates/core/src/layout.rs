//! Card layout for a view: grid placement in fixed or space-filling mode,
//! automatic roll-up when cards get too small, depth labels and subtree
//! colors.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::AggregationConfig;
use crate::hierarchy::{depth_of, roll_up, validate_view, DepthReference, Hierarchy, View, Violation};
use crate::model::NodeId;

/// Distinct subtree colors available to readers.
pub const COLOR_GROUPS: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("view is not a valid cut ({} violations)", .0.len())]
    InvalidView(Vec<Violation>),
    #[error("viewport {width}x{height} cannot hold cards of the minimum size")]
    ViewportTooSmall { width: f64, height: f64 },
    #[error("viewport dimensions must be positive")]
    InvalidViewport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub width: f64,
    pub height: f64,
}

impl Viewport {
    pub fn new(width: f64, height: f64) -> Self {
        Viewport { width, height }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "camelCase")]
pub enum LayoutMode {
    #[serde(rename_all = "camelCase")]
    Fixed { card_width: f64, card_height: f64 },
    SpaceFilling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LayoutConfig {
    #[serde(flatten)]
    pub mode: LayoutMode,
    pub min_card_width: f64,
    pub min_card_height: f64,
    #[serde(flatten)]
    pub aggregation: AggregationConfig,
    /// Relative card widths; cards not listed weigh 1.
    #[serde(default)]
    pub weights: BTreeMap<NodeId, f64>,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            mode: LayoutMode::SpaceFilling,
            min_card_width: 160.0,
            min_card_height: 120.0,
            aggregation: AggregationConfig::default(),
            weights: BTreeMap::new(),
        }
    }
}

impl LayoutConfig {
    pub fn weight(&self, id: &NodeId) -> f64 {
        self.weights
            .get(id)
            .copied()
            .filter(|w| w.is_finite() && *w > 0.0)
            .unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    /// Positive-area intersection. Edges that touch up to floating-point
    /// rounding (below a millionth of a pixel) do not count.
    pub fn overlaps(&self, other: &Rect) -> bool {
        const EPS: f64 = 1e-6;
        self.x + EPS < other.x + other.width
            && other.x + EPS < self.x + self.width
            && self.y + EPS < other.y + other.height
            && other.y + EPS < self.y + self.height
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CardFrame {
    pub node_id: NodeId,
    pub rect: Rect,
    pub is_pile: bool,
    pub depth_label: Option<usize>,
    pub color_group: Option<u8>,
    pub width_weight: f64,
}

/// Rows and columns for `n` space-filling cards, or `None` when no grid
/// keeps cards at or above the minimum size. Minimizes unused cells, then
/// prefers squarer cards, then fewer rows.
pub fn choose_grid(n: usize, viewport: Viewport, min_w: f64, min_h: f64) -> Option<(usize, usize)> {
    if n == 0 {
        return Some((0, 0));
    }
    let mut best: Option<(usize, usize)> = None;
    for rows in 1..=n {
        let cols = n.div_ceil(rows);
        let (w, h) = (viewport.width / cols as f64, viewport.height / rows as f64);
        if w < min_w || h < min_h {
            continue;
        }
        best = match best {
            None => Some((rows, cols)),
            Some((br, bc)) => {
                // unused fraction (rc - n) / rc, compared without rounding
                let lhs = (rows * cols - n) * (br * bc);
                let rhs = (br * bc - n) * (rows * cols);
                let skew = |r: usize, c: usize| {
                    ((viewport.width / c as f64) / (viewport.height / r as f64)).ln().abs()
                };
                if lhs < rhs || (lhs == rhs && skew(rows, cols) < skew(br, bc) - 1e-12) {
                    Some((rows, cols))
                } else {
                    Some((br, bc))
                }
            }
        };
    }
    best
}

/// Places every member of `v` on a left-to-right, top-to-bottom grid.
pub fn layout_view(
    h: &Hierarchy,
    v: &View,
    viewport: Viewport,
    cfg: &LayoutConfig,
) -> Result<Vec<CardFrame>, LayoutError> {
    if !(viewport.width > 0.0 && viewport.height > 0.0) {
        return Err(LayoutError::InvalidViewport);
    }
    let violations = validate_view(h, v);
    if !violations.is_empty() {
        return Err(LayoutError::InvalidView(violations));
    }
    let too_small = LayoutError::ViewportTooSmall {
        width: viewport.width,
        height: viewport.height,
    };
    let frame = |id: &NodeId, rect: Rect| CardFrame {
        node_id: id.clone(),
        rect,
        is_pile: h.get(id.as_str()).is_some_and(|n| n.is_pile()),
        depth_label: None,
        color_group: None,
        width_weight: cfg.weight(id),
    };
    match cfg.mode {
        LayoutMode::Fixed {
            card_width,
            card_height,
        } => {
            let cols = (viewport.width / card_width).floor() as usize;
            if cols == 0 {
                return Err(too_small);
            }
            Ok(v.members
                .iter()
                .enumerate()
                .map(|(i, id)| {
                    let rect = Rect {
                        x: (i % cols) as f64 * card_width,
                        y: (i / cols) as f64 * card_height,
                        width: card_width,
                        height: card_height,
                    };
                    frame(id, rect)
                })
                .collect())
        }
        LayoutMode::SpaceFilling => {
            let (rows, cols) =
                choose_grid(v.len(), viewport, cfg.min_card_width, cfg.min_card_height)
                    .ok_or(too_small)?;
            if rows == 0 {
                return Ok(Vec::new());
            }
            let cell_w = viewport.width / cols as f64;
            let height = viewport.height / rows as f64;
            let mut frames = Vec::with_capacity(v.len());
            for (r, row) in v.members.chunks(cols).enumerate() {
                let row_width = cell_w * row.len() as f64;
                let total: f64 = row.iter().map(|id| cfg.weight(id)).sum();
                let mut x = 0.0;
                for id in row {
                    let width = row_width * cfg.weight(id) / total;
                    let rect = Rect {
                        x,
                        y: r as f64 * height,
                        width,
                        height,
                    };
                    x += width;
                    frames.push(frame(id, rect));
                }
            }
            Ok(frames)
        }
    }
}

fn fits(n: usize, viewport: Viewport, cfg: &LayoutConfig) -> bool {
    match cfg.mode {
        LayoutMode::Fixed { .. } => true,
        LayoutMode::SpaceFilling => {
            choose_grid(n, viewport, cfg.min_card_width, cfg.min_card_height).is_some()
        }
    }
}

/// Rolls up members far from the reader's focus until the space-filling
/// layout fits. The deepest member farthest (by position) from the most
/// recently drilled node goes first. Stops at the top view.
pub fn auto_rollup(
    h: &Hierarchy,
    v: &View,
    viewport: Viewport,
    cfg: &LayoutConfig,
    focus: Option<&NodeId>,
) -> View {
    let mut view = v.clone();
    while !fits(view.len(), viewport, cfg) {
        let anchor = focus
            .and_then(|f| {
                view.members
                    .iter()
                    .position(|m| m == f || h.is_ancestor(f, m) || h.is_ancestor(m, f))
            })
            .unwrap_or(0);
        let candidate = view
            .members
            .iter()
            .enumerate()
            .filter(|(_, m)| h.parent(m).is_some())
            .max_by_key(|(i, m)| (h.depth(m).unwrap_or(0), i.abs_diff(anchor), *i))
            .map(|(_, m)| m.clone());
        let Some(candidate) = candidate else {
            break;
        };
        view = roll_up(h, &view, &candidate).expect("candidate is a non-root member");
    }
    view
}

/// Color groups for members under the five most recently drilled piles that
/// are still open. Group 0 is the most recent.
pub fn assign_subtree_colors(
    h: &Hierarchy,
    v: &View,
    drill_history: &[NodeId],
) -> BTreeMap<NodeId, u8> {
    let open: HashSet<&NodeId> = v.members.iter().filter_map(|m| h.parent(m)).collect();
    let mut ranked: Vec<&NodeId> = Vec::new();
    for p in drill_history.iter().rev() {
        if ranked.len() == COLOR_GROUPS {
            break;
        }
        if open.contains(p) && !ranked.contains(&p) {
            ranked.push(p);
        }
    }
    v.members
        .iter()
        .filter_map(|m| {
            let parent = h.parent(m)?;
            let group = ranked.iter().position(|p| *p == parent)?;
            Some((m.clone(), group as u8))
        })
        .collect()
}

/// Fills depth labels (relative to `base`) and color groups into frames.
pub fn decorate_frames(
    h: &Hierarchy,
    frames: &mut [CardFrame],
    base: &View,
    colors: &BTreeMap<NodeId, u8>,
) {
    for f in frames {
        f.depth_label = depth_of(h, &f.node_id, DepthReference::View(base))
            .ok()
            .filter(|d| *d > 0);
        f.color_group = colors.get(&f.node_id).copied();
    }
}
