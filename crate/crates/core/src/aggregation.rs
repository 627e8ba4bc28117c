//! Merge operators, the compatibility engine that enables or disables them,
//! and split.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{Hierarchy, HierarchyError};
use crate::model::{
    ArithmeticOp, AxisDescriptor, AxisDomain, AxisKind, AxisPolicy, ChartKind, DataPoint,
    DataSeries, LabelStat, Node, NodeId, Pile, ProjectedPoint, Representation,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Label,
    Summarize,
    Archetype,
    Project,
    Juxtapose,
    Overlay,
}

impl OpKind {
    pub const ALL: [OpKind; 6] = [
        OpKind::Label,
        OpKind::Summarize,
        OpKind::Archetype,
        OpKind::Project,
        OpKind::Juxtapose,
        OpKind::Overlay,
    ];
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OpKind::Label => "label",
            OpKind::Summarize => "summarize",
            OpKind::Archetype => "archetype",
            OpKind::Project => "project",
            OpKind::Juxtapose => "juxtapose",
            OpKind::Overlay => "overlay",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Verdict {
    Enabled,
    Disabled { reason: String },
}

impl Verdict {
    fn disabled(reason: impl Into<String>) -> Self {
        Verdict::Disabled {
            reason: reason.into(),
        }
    }

    pub fn is_enabled(&self) -> bool {
        matches!(self, Verdict::Enabled)
    }
}

/// Per-operator verdicts for one selection. Every [`OpKind`] has an entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OpAvailability(BTreeMap<OpKind, Verdict>);

impl OpAvailability {
    pub fn get(&self, kind: OpKind) -> &Verdict {
        &self.0[&kind]
    }

    pub fn is_enabled(&self, kind: OpKind) -> bool {
        self.get(kind).is_enabled()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OpKind, &Verdict)> {
        self.0.iter()
    }
}

/// Legibility limits for juxtaposed small multiples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AggregationConfig {
    pub juxtapose_card_px: f64,
    pub min_juxtapose_cell_px: f64,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            juxtapose_card_px: 300.0,
            min_juxtapose_cell_px: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregationError {
    #[error("a merge needs at least two distinct nodes")]
    TooFewNodes,
    #[error("node `{0}` is selected twice")]
    DuplicateNode(NodeId),
    #[error("node `{0}` already belongs to a pile")]
    AncestryConflict(NodeId),
    #[error("{op} is disabled: {reason}")]
    Disabled { op: OpKind, reason: String },
    #[error("{op:?} takes exactly two operands, got {got}")]
    ArityMismatch { op: ArithmeticOp, got: usize },
    #[error("every point of the summarized series is null")]
    AllNullResult,
    #[error("archetype `{0}` is not among the selected nodes")]
    ChosenNotMember(NodeId),
    #[error("the two charts share no x-value where both have data")]
    EmptyIntersection,
    #[error("axis policy {policy:?} does not fit {distinct} distinct y-dimensions")]
    PolicyMismatch { policy: AxisPolicy, distinct: usize },
    #[error("a custom label needs text")]
    MissingLabelText,
    #[error("`{0}` is not a pile")]
    UnknownPile(NodeId),
    #[error("cannot split `{pile}`: {reason}")]
    SplitBlocked { pile: NodeId, reason: String },
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
}

/// Operator and its parameters, as authors and scripts express a merge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum MergeOp {
    Label {
        stat: LabelStat,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        text: Option<String>,
    },
    Summarize {
        arithmetic: ArithmeticOp,
    },
    Archetype {
        chosen: NodeId,
    },
    Project,
    Juxtapose,
    Overlay {
        #[serde(rename = "axisPolicy")]
        axis_policy: AxisPolicy,
    },
}

impl MergeOp {
    pub fn kind(&self) -> OpKind {
        match self {
            MergeOp::Label { .. } => OpKind::Label,
            MergeOp::Summarize { .. } => OpKind::Summarize,
            MergeOp::Archetype { .. } => OpKind::Archetype,
            MergeOp::Project => OpKind::Project,
            MergeOp::Juxtapose => OpKind::Juxtapose,
            MergeOp::Overlay { .. } => OpKind::Overlay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    #[serde(flatten)]
    pub op: MergeOp,
    pub nodes: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<String>,
}

impl Merge {
    pub fn new<I, S>(op: MergeOp, nodes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<NodeId>,
    {
        Merge {
            op,
            nodes: nodes.into_iter().map(Into::into).collect(),
            id: None,
            title: None,
            annotation: None,
        }
    }
}

/// A node seen as a single series, which is what arithmetic, projection and
/// overlay operate on. Atoms with one series and summarized piles qualify.
#[derive(Debug, Clone, Copy)]
pub struct Exposed<'a> {
    pub series: &'a DataSeries,
    pub kind: ChartKind,
}

pub fn exposed_series<'a>(h: &'a Hierarchy, id: &NodeId) -> Option<Exposed<'a>> {
    match h.get(id.as_str())? {
        Node::Atom(a) if a.series.len() == 1 => Some(Exposed {
            series: &a.series[0],
            kind: a.kind,
        }),
        Node::Atom(_) => None,
        Node::Pile(p) => match &p.representation {
            Representation::Summarized {
                series, operands, ..
            } => {
                let kind = operands
                    .first()
                    .and_then(|o| exposed_series(h, o))
                    .map_or(ChartKind::Line, |e| e.kind);
                Some(Exposed { series, kind })
            }
            _ => None,
        },
    }
}

/// Number of unit charts a node contributes to a small-multiples grid.
fn unit_count(h: &Hierarchy, id: &NodeId) -> usize {
    match h.get(id.as_str()) {
        Some(Node::Pile(p)) if matches!(p.representation, Representation::Juxtaposed {}) => {
            p.children.iter().map(|c| unit_count(h, c)).sum()
        }
        _ => 1,
    }
}

/// Rows and columns of a near-square grid holding `n` cells.
pub fn juxtapose_grid(n: usize) -> (usize, usize) {
    if n == 0 {
        return (0, 0);
    }
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    (rows, cols)
}

fn check_operands(h: &Hierarchy, ids: &[NodeId]) -> Result<(), AggregationError> {
    let mut seen = HashSet::new();
    for id in ids {
        h.node(id)?;
        if !seen.insert(id) {
            return Err(AggregationError::DuplicateNode(id.clone()));
        }
    }
    if ids.len() < 2 {
        return Err(AggregationError::TooFewNodes);
    }
    if let Some(id) = ids.iter().find(|id| h.parent(id).is_some()) {
        return Err(AggregationError::AncestryConflict(id.clone()));
    }
    Ok(())
}

fn exposures<'a>(h: &'a Hierarchy, ids: &[NodeId]) -> Result<Vec<Exposed<'a>>, Verdict> {
    ids.iter()
        .map(|id| exposed_series(h, id).ok_or_else(|| Verdict::disabled("non-series operand")))
        .collect()
}

fn shared_x(ex: &[Exposed<'_>]) -> Result<(), Verdict> {
    let first = &ex[0].series.x;
    if ex.iter().any(|e| !e.series.x.same_dimension(first)) {
        return Err(Verdict::disabled("x-dimension mismatch"));
    }
    if ex.iter().any(|e| e.series.x.domain != first.domain) {
        return Err(Verdict::disabled("x-domain mismatch"));
    }
    Ok(())
}

fn any_key_all_present(ex: &[Exposed<'_>]) -> bool {
    let lookups: Vec<HashMap<&str, Option<f64>>> = ex.iter().map(|e| point_map(e.series)).collect();
    ex[0].series.keys().iter().any(|k| {
        lookups
            .iter()
            .all(|m| m.get(k).copied().flatten().is_some())
    })
}

fn point_map(s: &DataSeries) -> HashMap<&str, Option<f64>> {
    s.points.iter().map(|p| (p.x.as_str(), p.y)).collect()
}

fn distinct_y_dims(ex: &[Exposed<'_>]) -> usize {
    let mut dims: Vec<&AxisDescriptor> = Vec::new();
    for e in ex {
        if !dims.iter().any(|d| d.same_dimension(&e.series.y)) {
            dims.push(&e.series.y);
        }
    }
    dims.len()
}

fn summarize_verdict(h: &Hierarchy, ids: &[NodeId]) -> Verdict {
    let ex = match exposures(h, ids) {
        Ok(ex) => ex,
        Err(v) => return v,
    };
    if let Err(v) = shared_x(&ex) {
        return v;
    }
    if distinct_y_dims(&ex) != 1 {
        return Verdict::disabled("y-dimension mismatch");
    }
    if !any_key_all_present(&ex) {
        return Verdict::disabled("no overlapping data points");
    }
    Verdict::Enabled
}

fn project_verdict(h: &Hierarchy, ids: &[NodeId]) -> Verdict {
    if ids.len() != 2 {
        return Verdict::disabled("projection needs exactly two charts");
    }
    let ex = match exposures(h, ids) {
        Ok(ex) => ex,
        Err(v) => return v,
    };
    if let Err(v) = shared_x(&ex) {
        return v;
    }
    if !any_key_all_present(&ex) {
        return Verdict::disabled("no overlapping data points");
    }
    Verdict::Enabled
}

fn overlay_verdict(h: &Hierarchy, ids: &[NodeId]) -> Verdict {
    let ex = match exposures(h, ids) {
        Ok(ex) => ex,
        Err(v) => return v,
    };
    if ex
        .iter()
        .any(|e| !matches!(e.kind, ChartKind::Line | ChartKind::Bar))
    {
        return Verdict::disabled("overlay needs line or bar charts");
    }
    if ex.iter().any(|e| e.kind != ex[0].kind) {
        return Verdict::disabled("chart kind mismatch");
    }
    if let Err(v) = shared_x(&ex) {
        return v;
    }
    if distinct_y_dims(&ex) > 2 {
        return Verdict::disabled("more than two y-dimensions");
    }
    Verdict::Enabled
}

fn juxtapose_verdict(h: &Hierarchy, ids: &[NodeId], cfg: &AggregationConfig) -> Verdict {
    let units: usize = ids.iter().map(|id| unit_count(h, id)).sum();
    let (_, cols) = juxtapose_grid(units);
    let cell = cfg.juxtapose_card_px / cols as f64;
    if cell < cfg.min_juxtapose_cell_px {
        Verdict::disabled("cells below legibility minimum")
    } else {
        Verdict::Enabled
    }
}

/// Which operators may merge `ids`, with a reason for each disabled one.
pub fn applicable_ops(
    h: &Hierarchy,
    ids: &[NodeId],
    cfg: &AggregationConfig,
) -> Result<OpAvailability, AggregationError> {
    check_operands(h, ids)?;
    let mut map = BTreeMap::new();
    map.insert(OpKind::Label, Verdict::Enabled);
    map.insert(OpKind::Archetype, Verdict::Enabled);
    map.insert(OpKind::Summarize, summarize_verdict(h, ids));
    map.insert(OpKind::Project, project_verdict(h, ids));
    map.insert(OpKind::Overlay, overlay_verdict(h, ids));
    map.insert(OpKind::Juxtapose, juxtapose_verdict(h, ids, cfg));
    Ok(OpAvailability(map))
}

fn require(op: OpKind, verdict: Verdict) -> Result<(), AggregationError> {
    match verdict {
        Verdict::Enabled => Ok(()),
        Verdict::Disabled { reason } => Err(AggregationError::Disabled { op, reason }),
    }
}

fn new_pile(h: &Hierarchy, ids: &[NodeId], representation: Representation, title: String) -> Pile {
    Pile {
        id: h.fresh_id("pile"),
        children: ids.to_vec(),
        representation,
        title,
        annotation: None,
    }
}

fn titles(h: &Hierarchy, ids: &[NodeId]) -> Vec<String> {
    ids.iter()
        .map(|id| h.get(id.as_str()).map_or_else(|| id.to_string(), |n| n.title().to_string()))
        .collect()
}

/// All non-null y-values under `id`, across every series of every leaf.
pub fn descendant_values(h: &Hierarchy, id: &NodeId) -> Vec<f64> {
    h.leaves_under(id)
        .iter()
        .filter_map(|leaf| h.get(leaf.as_str()).and_then(Node::as_atom))
        .flat_map(|a| a.series.iter().flat_map(|s| s.values()))
        .collect()
}

fn statistic(stat: LabelStat, values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    Some(match stat {
        LabelStat::Mean => values.iter().sum::<f64>() / n as f64,
        LabelStat::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
        LabelStat::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        LabelStat::Median => {
            values.sort_by(f64::total_cmp);
            if n % 2 == 1 {
                values[n / 2]
            } else {
                (values[n / 2 - 1] + values[n / 2]) / 2.0
            }
        }
        LabelStat::Custom => return None,
    })
}

/// Formats a label scalar with at most four decimals and no trailing zeros.
pub fn format_scalar(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Text a label pile shows for `stat` over the given operands.
pub fn label_text(h: &Hierarchy, ids: &[NodeId], stat: LabelStat) -> Option<String> {
    let mut values: Vec<f64> = ids.iter().flat_map(|id| descendant_values(h, id)).collect();
    if stat == LabelStat::Custom {
        return None;
    }
    Some(statistic(stat, &mut values).map_or_else(|| "no data".to_string(), format_scalar))
}

pub fn merge_label(
    h: &Hierarchy,
    ids: &[NodeId],
    stat: LabelStat,
    custom_text: Option<&str>,
) -> Result<Pile, AggregationError> {
    check_operands(h, ids)?;
    let text = match (stat, custom_text) {
        (LabelStat::Custom, Some(t)) if !t.trim().is_empty() => t.to_string(),
        (LabelStat::Custom, _) => return Err(AggregationError::MissingLabelText),
        (stat, _) => label_text(h, ids, stat).expect("non-custom stat"),
    };
    let title = text.clone();
    Ok(new_pile(h, ids, Representation::Label { text, stat }, title))
}

/// Pointwise arithmetic over operand series sharing one x domain. Null
/// operands and division by zero give null points.
pub fn summarize_series(operands: &[&DataSeries], op: ArithmeticOp, name: &str) -> DataSeries {
    let first = operands[0];
    let lookups: Vec<HashMap<&str, Option<f64>>> =
        operands.iter().map(|s| point_map(s)).collect();
    let points: Vec<DataPoint> = first
        .keys()
        .into_iter()
        .map(|key| {
            let ys: Option<Vec<f64>> = lookups
                .iter()
                .map(|m| m.get(key).copied().flatten())
                .collect();
            let y = ys.and_then(|ys| combine(op, &ys)).filter(|v| v.is_finite());
            DataPoint::new(key, y)
        })
        .collect();
    let y = result_axis(&first.y, op, operands.len(), points.iter().filter_map(|p| p.y));
    DataSeries {
        name: name.to_string(),
        x: first.x.clone(),
        y,
        points,
    }
}

fn combine(op: ArithmeticOp, ys: &[f64]) -> Option<f64> {
    match op {
        ArithmeticOp::Add => Some(ys.iter().sum()),
        ArithmeticOp::Multiply => Some(ys.iter().product()),
        ArithmeticOp::Average => Some(ys.iter().sum::<f64>() / ys.len() as f64),
        ArithmeticOp::Subtract => Some(ys[0] - ys[1]),
        ArithmeticOp::Divide => (ys[1] != 0.0).then(|| ys[0] / ys[1]),
    }
}

fn result_axis(
    y: &AxisDescriptor,
    op: ArithmeticOp,
    arity: usize,
    values: impl Iterator<Item = f64>,
) -> AxisDescriptor {
    let (dimension, unit) = match op {
        ArithmeticOp::Add | ArithmeticOp::Subtract | ArithmeticOp::Average => {
            (y.dimension.clone(), y.unit.clone())
        }
        ArithmeticOp::Multiply => (
            vec![y.dimension.as_str(); arity].join("×"),
            y.unit.as_ref().map(|u| vec![u.as_str(); arity].join("×")),
        ),
        ArithmeticOp::Divide => (
            format!("{0}/{0}", y.dimension),
            y.unit.as_ref().map(|u| format!("{u}/{u}")),
        ),
    };
    AxisDescriptor {
        dimension,
        unit,
        kind: AxisKind::Quantitative,
        domain: AxisDomain::range_of(values),
    }
}

fn summarize_title(titles: &[String], op: ArithmeticOp) -> String {
    match op {
        ArithmeticOp::Average => format!("Average of {}", titles.join(", ")),
        op => titles.join(&format!(" {} ", op.symbol())),
    }
}

pub fn merge_summarize(
    h: &Hierarchy,
    ids: &[NodeId],
    op: ArithmeticOp,
) -> Result<Pile, AggregationError> {
    check_operands(h, ids)?;
    require(OpKind::Summarize, summarize_verdict(h, ids))?;
    if op.is_binary() && ids.len() != 2 {
        return Err(AggregationError::ArityMismatch { op, got: ids.len() });
    }
    let series: Vec<&DataSeries> = ids
        .iter()
        .map(|id| exposed_series(h, id).expect("verdict checked").series)
        .collect();
    let title = summarize_title(&titles(h, ids), op);
    let result = summarize_series(&series, op, &title);
    if result.points.iter().all(|p| p.y.is_none()) {
        return Err(AggregationError::AllNullResult);
    }
    Ok(new_pile(
        h,
        ids,
        Representation::Summarized {
            series: result,
            op,
            operands: ids.to_vec(),
        },
        title,
    ))
}

pub fn merge_archetype(
    h: &Hierarchy,
    ids: &[NodeId],
    chosen: &NodeId,
) -> Result<Pile, AggregationError> {
    check_operands(h, ids)?;
    if !ids.contains(chosen) {
        return Err(AggregationError::ChosenNotMember(chosen.clone()));
    }
    let title = h.node(chosen)?.title().to_string();
    Ok(new_pile(
        h,
        ids,
        Representation::Archetype {
            child_id: chosen.clone(),
        },
        title,
    ))
}

/// Pairs two series' y-values by shared x-key.
pub fn project_points(a: &DataSeries, b: &DataSeries) -> Vec<ProjectedPoint> {
    let lookup = point_map(b);
    a.points
        .iter()
        .filter_map(|p| {
            let ya = p.y?;
            let yb = lookup.get(p.x.as_str()).copied().flatten()?;
            Some(ProjectedPoint {
                x: ya,
                y: yb,
                key: p.x.clone(),
            })
        })
        .collect()
}

pub fn merge_project(h: &Hierarchy, a: &NodeId, b: &NodeId) -> Result<Pile, AggregationError> {
    let ids = [a.clone(), b.clone()];
    check_operands(h, &ids)?;
    require(OpKind::Project, project_verdict(h, &ids))?;
    let sa = exposed_series(h, a).expect("verdict checked").series;
    let sb = exposed_series(h, b).expect("verdict checked").series;
    let points = project_points(sa, sb);
    if points.is_empty() {
        return Err(AggregationError::EmptyIntersection);
    }
    let t = titles(h, &ids);
    Ok(new_pile(
        h,
        &ids,
        Representation::Projected {
            points,
            x_dim: sa.y.clone(),
            y_dim: sb.y.clone(),
        },
        format!("{} vs {}", t[0], t[1]),
    ))
}

pub fn merge_juxtapose(
    h: &Hierarchy,
    ids: &[NodeId],
    cfg: &AggregationConfig,
) -> Result<Pile, AggregationError> {
    check_operands(h, ids)?;
    require(OpKind::Juxtapose, juxtapose_verdict(h, ids, cfg))?;
    Ok(new_pile(
        h,
        ids,
        Representation::Juxtaposed {},
        titles(h, ids).join(" | "),
    ))
}

pub fn merge_overlay(
    h: &Hierarchy,
    ids: &[NodeId],
    policy: AxisPolicy,
) -> Result<Pile, AggregationError> {
    check_operands(h, ids)?;
    require(OpKind::Overlay, overlay_verdict(h, ids))?;
    let ex = exposures(h, ids).expect("verdict checked");
    let distinct = distinct_y_dims(&ex);
    let fits = match policy {
        AxisPolicy::SharedY => distinct == 1,
        AxisPolicy::DualY => distinct == 2,
    };
    if !fits {
        return Err(AggregationError::PolicyMismatch { policy, distinct });
    }
    Ok(new_pile(
        h,
        ids,
        Representation::Overlaid {
            axis_policy: policy,
        },
        titles(h, ids).join(" & "),
    ))
}

/// Builds the pile described by `merge` and attaches it. Returns the new
/// hierarchy and the pile id.
pub fn apply_merge(
    h: &Hierarchy,
    merge: &Merge,
    cfg: &AggregationConfig,
) -> Result<(Hierarchy, NodeId), AggregationError> {
    let ids = &merge.nodes;
    let mut pile = match &merge.op {
        MergeOp::Label { stat, text } => merge_label(h, ids, *stat, text.as_deref())?,
        MergeOp::Summarize { arithmetic } => merge_summarize(h, ids, *arithmetic)?,
        MergeOp::Archetype { chosen } => merge_archetype(h, ids, chosen)?,
        MergeOp::Project => {
            check_operands(h, ids)?;
            if ids.len() != 2 {
                return Err(AggregationError::Disabled {
                    op: OpKind::Project,
                    reason: "projection needs exactly two charts".into(),
                });
            }
            merge_project(h, &ids[0], &ids[1])?
        }
        MergeOp::Juxtapose => merge_juxtapose(h, ids, cfg)?,
        MergeOp::Overlay { axis_policy } => merge_overlay(h, ids, *axis_policy)?,
    };
    if let Some(id) = &merge.id {
        pile.id = id.clone();
    }
    if let Some(title) = &merge.title {
        pile.title = title.clone();
    }
    pile.annotation = merge.annotation.clone();
    let id = pile.id.clone();
    Ok((h.with_pile(pile)?, id))
}

/// Removes a pile, promoting its children to its place. Nested piles can be
/// split only under parents whose representation does not depend on the
/// identity of their children (label, juxtaposition).
pub fn split(h: &Hierarchy, pile: &NodeId) -> Result<Hierarchy, AggregationError> {
    match h.get(pile.as_str()) {
        Some(Node::Pile(_)) => {}
        _ => return Err(AggregationError::UnknownPile(pile.clone())),
    }
    if let Some(parent) = h.parent(pile) {
        let rep = &h.node(parent)?.as_pile().expect("parents are piles").representation;
        if !matches!(rep, Representation::Label { .. } | Representation::Juxtaposed {}) {
            return Err(AggregationError::SplitBlocked {
                pile: pile.clone(),
                reason: format!("parent `{parent}` is a {} pile built from it", rep.name()),
            });
        }
    }
    Ok(h.without_pile(pile)?)
}

/// Checks every pile's representation against its children under the
/// re-merge policy. Returns one message per inconsistency.
pub fn check_policy(h: &Hierarchy, cfg: &AggregationConfig) -> Vec<String> {
    let mut problems = Vec::new();
    for pile in h.piles_post_order() {
        let ids = &pile.children;
        let mut report = |msg: String| problems.push(format!("pile `{}`: {msg}", pile.id));
        match &pile.representation {
            Representation::Label { text, stat } => {
                if let Some(expected) = label_text(h, ids, *stat) {
                    if &expected != text {
                        report(format!("label text `{text}` does not match {stat:?} `{expected}`"));
                    }
                }
            }
            Representation::Archetype { child_id } => {
                if !ids.contains(child_id) {
                    report(format!("archetype `{child_id}` is not a child"));
                }
            }
            Representation::Summarized {
                series,
                op,
                operands,
            } => {
                let same_set = operands.len() == ids.len()
                    && operands.iter().all(|o| ids.contains(o));
                if !same_set {
                    report("operands differ from children".into());
                } else if let Verdict::Disabled { reason } = summarize_verdict(h, operands) {
                    report(format!("summarize not permitted: {reason}"));
                } else if op.is_binary() && operands.len() != 2 {
                    report(format!("{op:?} needs two operands"));
                } else {
                    let inputs: Vec<&DataSeries> = operands
                        .iter()
                        .map(|o| exposed_series(h, o).expect("checked").series)
                        .collect();
                    let expected = summarize_series(&inputs, *op, &series.name);
                    if expected.points != series.points {
                        report("summarized series does not match its operands".into());
                    }
                }
            }
            Representation::Projected { points, .. } => {
                if let Verdict::Disabled { reason } = project_verdict(h, ids) {
                    report(format!("projection not permitted: {reason}"));
                } else {
                    let a = exposed_series(h, &ids[0]).expect("checked").series;
                    let b = exposed_series(h, &ids[1]).expect("checked").series;
                    let mut expected = project_points(a, b);
                    if &expected != points {
                        // operands may have been selected right-to-left
                        expected = project_points(b, a);
                        if &expected != points {
                            report("projected points do not match the children".into());
                        }
                    }
                }
            }
            Representation::Juxtaposed {} => {
                if let Verdict::Disabled { reason } = juxtapose_verdict(h, ids, cfg) {
                    report(reason);
                }
            }
            Representation::Overlaid { axis_policy } => match overlay_verdict(h, ids) {
                Verdict::Disabled { reason } => report(format!("overlay not permitted: {reason}")),
                Verdict::Enabled => {
                    let ex = exposures(h, ids).expect("checked");
                    let distinct = distinct_y_dims(&ex);
                    let fits = match axis_policy {
                        AxisPolicy::SharedY => distinct == 1,
                        AxisPolicy::DualY => distinct == 2,
                    };
                    if !fits {
                        report(format!("{axis_policy:?} does not fit {distinct} y-dimensions"));
                    }
                }
            },
        }
    }
    problems
}
