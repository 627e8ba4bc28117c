//! Chart-level data model: axes, series, chart atoms, piles and their
//! representations.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Stable identifier of a node (atom or pile) in a hierarchy.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl std::borrow::Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisKind {
    Temporal,
    Categorical,
    Quantitative,
}

/// Values an axis can take: an ordered list of keys, or a numeric interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisDomain {
    Values(Vec<String>),
    Range { min: f64, max: f64 },
}

impl AxisDomain {
    pub fn range_of<I: IntoIterator<Item = f64>>(values: I) -> AxisDomain {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            min = min.min(v);
            max = max.max(v);
        }
        if min > max {
            AxisDomain::Range { min: 0.0, max: 0.0 }
        } else {
            AxisDomain::Range { min, max }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisDescriptor {
    pub dimension: String,
    #[serde(default)]
    pub unit: Option<String>,
    pub kind: AxisKind,
    pub domain: AxisDomain,
}

impl AxisDescriptor {
    /// Two axes measure the same dimension when name and unit agree.
    pub fn same_dimension(&self, other: &AxisDescriptor) -> bool {
        self.dimension == other.dimension && self.unit == other.unit
    }

    /// Display label such as `funds (USD)`.
    pub fn label(&self) -> String {
        match &self.unit {
            Some(u) => format!("{} ({})", self.dimension, u),
            None => self.dimension.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match &self.domain {
            AxisDomain::Values(values) => {
                if values.is_empty() {
                    return Err(format!("axis `{}` has an empty domain", self.dimension));
                }
                if self.kind == AxisKind::Quantitative {
                    return Err(format!(
                        "quantitative axis `{}` must use a numeric range",
                        self.dimension
                    ));
                }
                let mut seen = HashSet::new();
                for v in values {
                    if !seen.insert(v.as_str()) {
                        return Err(format!(
                            "axis `{}` repeats domain value `{}`",
                            self.dimension, v
                        ));
                    }
                }
            }
            AxisDomain::Range { min, max } => {
                if !(min.is_finite() && max.is_finite() && min <= max) {
                    return Err(format!("axis `{}` has an invalid range", self.dimension));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: String,
    pub y: Option<f64>,
}

impl DataPoint {
    pub fn new(x: impl Into<String>, y: Option<f64>) -> Self {
        DataPoint { x: x.into(), y }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSeries {
    pub name: String,
    pub x: AxisDescriptor,
    pub y: AxisDescriptor,
    pub points: Vec<DataPoint>,
}

impl DataSeries {
    /// Looks up the y-value at `key`; `None` when the key is absent or the point is null.
    pub fn value_at(&self, key: &str) -> Option<f64> {
        self.points.iter().find(|p| p.x == key).and_then(|p| p.y)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().filter_map(|p| p.y)
    }

    /// Keys this series is evaluated over: the x domain for keyed axes, the
    /// point keys otherwise.
    pub fn keys(&self) -> Vec<&str> {
        match &self.x.domain {
            AxisDomain::Values(values) => values.iter().map(String::as_str).collect(),
            AxisDomain::Range { .. } => self.points.iter().map(|p| p.x.as_str()).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.x.validate()?;
        self.y.validate()?;
        if self.y.kind != AxisKind::Quantitative {
            return Err(format!("series `{}` has a non-quantitative y axis", self.name));
        }
        let mut seen = HashSet::new();
        for p in &self.points {
            if !seen.insert(p.x.as_str()) {
                return Err(format!("series `{}` repeats x-value `{}`", self.name, p.x));
            }
            if let Some(y) = p.y {
                if !y.is_finite() {
                    return Err(format!("series `{}` has a non-finite value", self.name));
                }
            }
        }
        match &self.x.domain {
            AxisDomain::Values(values) => {
                // points must be a subsequence of the domain
                let mut cursor = values.iter();
                for p in &self.points {
                    if !cursor.any(|v| *v == p.x) {
                        return Err(format!(
                            "series `{}`: x-value `{}` is outside the domain or out of order",
                            self.name, p.x
                        ));
                    }
                }
            }
            AxisDomain::Range { min, max } => {
                for p in &self.points {
                    match p.x.parse::<f64>() {
                        Ok(v) if v >= *min && v <= *max => {}
                        _ => {
                            return Err(format!(
                                "series `{}`: x-value `{}` is outside the numeric range",
                                self.name, p.x
                            ))
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Line,
    Bar,
    Scatter,
}

/// Where an atom's data came from: a table and the column path inside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    pub table: String,
    pub column: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartAtom {
    pub id: NodeId,
    pub kind: ChartKind,
    pub series: Vec<DataSeries>,
    pub title: String,
    #[serde(default)]
    pub annotation: Option<String>,
    #[serde(default, rename = "sourceRef")]
    pub source_ref: Option<SourceRef>,
}

impl ChartAtom {
    pub fn validate(&self) -> Result<(), String> {
        if self.series.is_empty() {
            return Err(format!("atom `{}` has no series", self.id));
        }
        for s in &self.series {
            s.validate().map_err(|e| format!("atom `{}`: {e}", self.id))?;
        }
        if matches!(self.kind, ChartKind::Line | ChartKind::Bar) {
            let x = &self.series[0].x;
            if self.series.iter().any(|s| s.x != *x) {
                return Err(format!("atom `{}`: series do not share one x axis", self.id));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithmeticOp {
    Add,
    Subtract,
    Multiply,
    Divide,
    Average,
}

impl ArithmeticOp {
    pub fn is_binary(self) -> bool {
        matches!(self, ArithmeticOp::Subtract | ArithmeticOp::Divide)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ArithmeticOp::Add => "+",
            ArithmeticOp::Subtract => "-",
            ArithmeticOp::Multiply => "×",
            ArithmeticOp::Divide => "/",
            ArithmeticOp::Average => "avg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelStat {
    Mean,
    Median,
    Min,
    Max,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AxisPolicy {
    SharedY,
    DualY,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub x: f64,
    pub y: f64,
    pub key: String,
}

/// How a pile draws itself in place of its children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Representation {
    Label {
        text: String,
        stat: LabelStat,
    },
    Summarized {
        series: DataSeries,
        op: ArithmeticOp,
        /// Operands in author selection order; the first is the left operand.
        operands: Vec<NodeId>,
    },
    Archetype {
        #[serde(rename = "childId")]
        child_id: NodeId,
    },
    Projected {
        points: Vec<ProjectedPoint>,
        #[serde(rename = "xDim")]
        x_dim: AxisDescriptor,
        #[serde(rename = "yDim")]
        y_dim: AxisDescriptor,
    },
    Juxtaposed {},
    Overlaid {
        #[serde(rename = "axisPolicy")]
        axis_policy: AxisPolicy,
    },
}

impl Representation {
    pub fn name(&self) -> &'static str {
        match self {
            Representation::Label { .. } => "label",
            Representation::Summarized { .. } => "summarized",
            Representation::Archetype { .. } => "archetype",
            Representation::Projected { .. } => "projected",
            Representation::Juxtaposed {} => "juxtaposed",
            Representation::Overlaid { .. } => "overlaid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pile {
    pub id: NodeId,
    pub children: Vec<NodeId>,
    pub representation: Representation,
    pub title: String,
    #[serde(default)]
    pub annotation: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Atom(ChartAtom),
    Pile(Pile),
}

impl Node {
    pub fn id(&self) -> &NodeId {
        match self {
            Node::Atom(a) => &a.id,
            Node::Pile(p) => &p.id,
        }
    }

    pub fn title(&self) -> &str {
        match self {
            Node::Atom(a) => &a.title,
            Node::Pile(p) => &p.title,
        }
    }

    pub fn annotation(&self) -> Option<&str> {
        match self {
            Node::Atom(a) => a.annotation.as_deref(),
            Node::Pile(p) => p.annotation.as_deref(),
        }
    }

    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Atom(_) => &[],
            Node::Pile(p) => &p.children,
        }
    }

    pub fn is_pile(&self) -> bool {
        matches!(self, Node::Pile(_))
    }

    pub fn as_atom(&self) -> Option<&ChartAtom> {
        match self {
            Node::Atom(a) => Some(a),
            Node::Pile(_) => None,
        }
    }

    pub fn as_pile(&self) -> Option<&Pile> {
        match self {
            Node::Pile(p) => Some(p),
            Node::Atom(_) => None,
        }
    }

    pub(crate) fn set_title(&mut self, title: String) {
        match self {
            Node::Atom(a) => a.title = title,
            Node::Pile(p) => p.title = title,
        }
    }

    pub(crate) fn set_annotation(&mut self, text: Option<String>) {
        match self {
            Node::Atom(a) => a.annotation = text,
            Node::Pile(p) => p.annotation = text,
        }
    }
}
