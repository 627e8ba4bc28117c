//! What a card shows: the resolved content of atoms and piles, plus the tree
//! payload the reader's tree view is drawn from.

use serde::{Deserialize, Serialize};

use crate::aggregation::{exposed_series, juxtapose_grid};
use crate::hierarchy::{Hierarchy, View};
use crate::model::{
    AxisDescriptor, AxisPolicy, ChartKind, DataSeries, Node, NodeId, ProjectedPoint,
    Representation,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CardContent {
    Chart {
        kind: ChartKind,
        series: Vec<DataSeries>,
    },
    Label {
        text: String,
    },
    Scatter {
        points: Vec<ProjectedPoint>,
        #[serde(rename = "xDim")]
        x_dim: AxisDescriptor,
        #[serde(rename = "yDim")]
        y_dim: AxisDescriptor,
    },
    Grid {
        rows: usize,
        cols: usize,
        cells: Vec<CardContent>,
    },
    Overlay {
        kind: ChartKind,
        #[serde(rename = "axisPolicy")]
        axis_policy: AxisPolicy,
        series: Vec<DataSeries>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CardSpec {
    pub id: NodeId,
    pub title: String,
    pub annotation: Option<String>,
    pub is_pile: bool,
    pub content: CardContent,
}

pub fn card_content(h: &Hierarchy, id: &NodeId) -> Option<CardContent> {
    Some(match h.get(id.as_str())? {
        Node::Atom(a) => CardContent::Chart {
            kind: a.kind,
            series: a.series.clone(),
        },
        Node::Pile(p) => match &p.representation {
            Representation::Label { text, .. } => CardContent::Label { text: text.clone() },
            Representation::Summarized { series, .. } => CardContent::Chart {
                kind: exposed_series(h, id).map_or(ChartKind::Line, |e| e.kind),
                series: vec![series.clone()],
            },
            Representation::Archetype { child_id } => card_content(h, child_id)?,
            Representation::Projected {
                points,
                x_dim,
                y_dim,
            } => CardContent::Scatter {
                points: points.clone(),
                x_dim: x_dim.clone(),
                y_dim: y_dim.clone(),
            },
            Representation::Juxtaposed {} => {
                let cells: Vec<CardContent> = p
                    .children
                    .iter()
                    .filter_map(|c| card_content(h, c))
                    .collect();
                let (rows, cols) = juxtapose_grid(cells.len());
                CardContent::Grid { rows, cols, cells }
            }
            Representation::Overlaid { axis_policy } => {
                let exposed: Vec<_> = p
                    .children
                    .iter()
                    .filter_map(|c| exposed_series(h, c))
                    .collect();
                CardContent::Overlay {
                    kind: exposed.first().map_or(ChartKind::Line, |e| e.kind),
                    axis_policy: *axis_policy,
                    series: exposed.iter().map(|e| e.series.clone()).collect(),
                }
            }
        },
    })
}

pub fn card_spec(h: &Hierarchy, id: &NodeId) -> Option<CardSpec> {
    let node = h.get(id.as_str())?;
    Some(CardSpec {
        id: id.clone(),
        title: node.title().to_string(),
        annotation: node.annotation().map(str::to_string),
        is_pile: node.is_pile(),
        content: card_content(h, id)?,
    })
}

pub fn view_cards(h: &Hierarchy, v: &View) -> Vec<CardSpec> {
    v.members.iter().filter_map(|m| card_spec(h, m)).collect()
}

/// One flattened data row of a card: `(series, x, y, y2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatRow {
    pub series: String,
    pub x: String,
    pub y: Option<f64>,
    pub y2: Option<f64>,
}

/// Flattens card content into rows: one per series point, one per projected
/// point (y and y2 hold the pair), and one per label.
pub fn flatten_content(content: &CardContent, out: &mut Vec<FlatRow>) {
    match content {
        CardContent::Chart { series, .. } | CardContent::Overlay { series, .. } => {
            for s in series {
                for p in &s.points {
                    out.push(FlatRow {
                        series: s.name.clone(),
                        x: p.x.clone(),
                        y: p.y,
                        y2: None,
                    });
                }
            }
        }
        CardContent::Label { text } => out.push(FlatRow {
            series: text.clone(),
            x: String::new(),
            y: None,
            y2: None,
        }),
        CardContent::Scatter { points, .. } => {
            for p in points {
                out.push(FlatRow {
                    series: "projection".into(),
                    x: p.key.clone(),
                    y: Some(p.x),
                    y2: Some(p.y),
                });
            }
        }
        CardContent::Grid { cells, .. } => {
            for c in cells {
                flatten_content(c, out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TreeNode {
    pub id: NodeId,
    pub title: String,
    pub is_pile: bool,
    /// Shown as a card in the current view.
    pub visible: bool,
    pub children: Vec<TreeNode>,
}

/// Nested tree of the whole hierarchy with visibility flags for `v`.
pub fn tree_payload(h: &Hierarchy, v: &View) -> Vec<TreeNode> {
    fn build(h: &Hierarchy, v: &View, id: &NodeId) -> TreeNode {
        let node = h.get(id.as_str()).expect("hierarchy ids resolve");
        TreeNode {
            id: id.clone(),
            title: node.title().to_string(),
            is_pile: node.is_pile(),
            visible: v.contains(id),
            children: node.children().iter().map(|c| build(h, v, c)).collect(),
        }
    }
    h.roots().iter().map(|r| build(h, v, r)).collect()
}
