//! Tabular data ingestion and selection queries that turn feature columns
//! into chart atoms.
//!
//! Layout of an input file: the first `header_rows - 1` rows carry group
//! labels (top level first), repeated across the columns they span; the last
//! header row names the features. The first column holds the key (time tags
//! or categories). Empty group cells mean "no group at this level".

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    AxisDescriptor, AxisDomain, AxisKind, ChartAtom, ChartKind, DataPoint, DataSeries, NodeId,
    SourceRef,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("table has no data rows")]
    EmptyTable,
    #[error("header_rows must be at least 1")]
    NoHeader,
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("cell at row {row}, column {column} is not a number: `{text}`")]
    NonNumericCell {
        row: usize,
        column: usize,
        text: String,
    },
    #[error("duplicate feature `{0}`")]
    DuplicateFeatureName(String),
    #[error("duplicate key `{0}` in the first column")]
    DuplicateKey(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("unknown group path `{0}`")]
    UnknownGroupPath(String),
    #[error("table `{found}` does not match query table `{expected}`")]
    WrongTable { expected: String, found: String },
    #[error("malformed delimited text: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Tsv,
}

impl TableFormat {
    fn delimiter(self) -> u8 {
        match self {
            TableFormat::Csv => b',',
            TableFormat::Tsv => b'\t',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    #[serde(rename = "groupPath")]
    pub group_path: Vec<String>,
    #[serde(default)]
    pub unit: Option<String>,
    pub values: Vec<Option<f64>>,
}

impl FeatureColumn {
    /// Group path followed by the feature name.
    pub fn column_path(&self) -> Vec<String> {
        let mut p = self.group_path.clone();
        p.push(self.name.clone());
        p
    }

    pub fn mean(&self) -> Option<f64> {
        let vals: Vec<f64> = self.values.iter().flatten().copied().collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    pub id: String,
    pub key: AxisDescriptor,
    pub features: Vec<FeatureColumn>,
}

/// A node of the group tree derived from feature group paths.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupNode {
    pub label: String,
    pub groups: Vec<GroupNode>,
    pub features: Vec<String>,
}

impl DataTable {
    pub fn keys(&self) -> &[String] {
        match &self.key.domain {
            AxisDomain::Values(v) => v,
            AxisDomain::Range { .. } => &[],
        }
    }

    /// Header rows the canonical export of this table uses.
    pub fn header_rows(&self) -> usize {
        self.features
            .iter()
            .map(|f| f.group_path.len())
            .max()
            .unwrap_or(0)
            + 1
    }

    /// Group tree over the features; the root has an empty label.
    pub fn groups(&self) -> GroupNode {
        let mut root = GroupNode::default();
        for f in &self.features {
            let mut node = &mut root;
            for label in &f.group_path {
                let idx = match node.groups.iter().position(|g| &g.label == label) {
                    Some(i) => i,
                    None => {
                        node.groups.push(GroupNode {
                            label: label.clone(),
                            ..GroupNode::default()
                        });
                        node.groups.len() - 1
                    }
                };
                node = &mut node.groups[idx];
            }
            node.features.push(f.name.clone());
        }
        root
    }

    /// Finds a feature by `group/.../name` path, or by bare name when unique.
    pub fn find_feature(&self, spec: &str) -> Result<&FeatureColumn, IngestError> {
        if let Some(f) = self
            .features
            .iter()
            .find(|f| f.column_path().join("/") == spec)
        {
            return Ok(f);
        }
        let mut by_name = self.features.iter().filter(|f| f.name == spec);
        match (by_name.next(), by_name.next()) {
            (Some(f), None) => Ok(f),
            _ => Err(IngestError::UnknownFeature(spec.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.key.validate()?;
        let n = self.keys().len();
        let mut seen = HashSet::new();
        for f in &self.features {
            if f.values.len() != n {
                return Err(format!(
                    "feature `{}` has {} values for {n} keys",
                    f.name,
                    f.values.len()
                ));
            }
            if f.values.iter().flatten().any(|v| !v.is_finite()) {
                return Err(format!("feature `{}` has a non-finite value", f.name));
            }
            if !seen.insert(f.column_path()) {
                return Err(format!("duplicate feature `{}`", f.column_path().join("/")));
            }
        }
        Ok(())
    }

    /// Canonical export: comma-delimited, LF line endings, quoted iff needed.
    pub fn to_csv(&self) -> String {
        let depth = self.header_rows() - 1;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .quote_style(csv::QuoteStyle::Necessary)
            .from_writer(Vec::new());
        for level in 0..depth {
            let mut row = vec![String::new()];
            row.extend(
                self.features
                    .iter()
                    .map(|f| f.group_path.get(level).cloned().unwrap_or_default()),
            );
            w.write_record(&row).expect("in-memory write");
        }
        let mut header = vec![with_unit(&self.key.dimension, self.key.unit.as_deref())];
        header.extend(
            self.features
                .iter()
                .map(|f| with_unit(&f.name, f.unit.as_deref())),
        );
        w.write_record(&header).expect("in-memory write");
        for (i, key) in self.keys().iter().enumerate() {
            let mut row = vec![key.clone()];
            row.extend(
                self.features
                    .iter()
                    .map(|f| f.values[i].map(|v| v.to_string()).unwrap_or_default()),
            );
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

fn with_unit(name: &str, unit: Option<&str>) -> String {
    match unit {
        Some(u) => format!("{name} [{u}]"),
        None => name.to_string(),
    }
}

/// Splits `name [unit]` into its parts.
fn split_unit(header: &str) -> (String, Option<String>) {
    let h = header.trim();
    if let Some(stripped) = h.strip_suffix(']') {
        if let Some(open) = stripped.rfind(" [") {
            let unit = &stripped[open + 2..];
            if !unit.is_empty() {
                return (stripped[..open].to_string(), Some(unit.to_string()));
            }
        }
    }
    (h.to_string(), None)
}

fn parse_number(text: &str) -> Option<f64> {
    let t = text.trim();
    // only plain decimal notation: digits, sign, point, exponent
    if !t
        .bytes()
        .all(|b| b.is_ascii_digit() || matches!(b, b'-' | b'+' | b'.' | b'e' | b'E'))
    {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn all_digits(s: &str, len: std::ops::RangeInclusive<usize>) -> bool {
    len.contains(&s.len()) && s.bytes().all(|b| b.is_ascii_digit())
}

/// Whether a key looks like a time tag: a year, year-month, date,
/// year-quarter, or clock time.
pub fn looks_temporal(key: &str) -> bool {
    let k = key.trim();
    if all_digits(k, 4..=4) {
        return true;
    }
    let parts: Vec<&str> = k.split(['-', '/']).collect();
    match parts.as_slice() {
        [y, m] if all_digits(y, 4..=4) => {
            all_digits(m, 1..=2)
                || (m.len() == 2 && (m.starts_with('Q') || m.starts_with('q')) && all_digits(&m[1..], 1..=1))
        }
        [y, m, d] if all_digits(y, 4..=4) => all_digits(m, 1..=2) && all_digits(d, 1..=2),
        _ => {
            let hm: Vec<&str> = k.split(':').collect();
            hm.len() >= 2 && hm.iter().all(|p| all_digits(p, 2..=2))
        }
    }
}

/// Parses delimited text into a [`DataTable`].
pub fn parse_table(
    id: &str,
    bytes: &[u8],
    format: TableFormat,
    header_rows: usize,
) -> Result<DataTable, IngestError> {
    if header_rows == 0 {
        return Err(IngestError::NoHeader);
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut rows: Vec<Vec<String>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IngestError::Csv(e.to_string()))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    if rows.len() <= header_rows {
        return Err(IngestError::EmptyTable);
    }
    let width = rows[header_rows - 1].len();
    if width < 2 {
        return Err(IngestError::EmptyTable);
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(IngestError::RaggedRows {
                row: i + 1,
                expected: width,
                found: row.len(),
            });
        }
    }

    let names = &rows[header_rows - 1];
    let (key_dim, key_unit) = split_unit(&names[0]);
    let mut features: Vec<FeatureColumn> = Vec::with_capacity(width - 1);
    let mut seen = HashSet::new();
    for col in 1..width {
        let group_path: Vec<String> = rows[..header_rows - 1]
            .iter()
            .map(|r| r[col].trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        let (name, unit) = split_unit(&names[col]);
        let f = FeatureColumn {
            name,
            group_path,
            unit,
            values: Vec::with_capacity(rows.len() - header_rows),
        };
        if !seen.insert(f.column_path()) {
            return Err(IngestError::DuplicateFeatureName(f.column_path().join("/")));
        }
        features.push(f);
    }

    let mut keys = Vec::with_capacity(rows.len() - header_rows);
    let mut seen_keys = HashSet::new();
    for (r, row) in rows.iter().enumerate().skip(header_rows) {
        let key = row[0].trim().to_string();
        if !seen_keys.insert(key.clone()) {
            return Err(IngestError::DuplicateKey(key));
        }
        keys.push(key);
        for (c, cell) in row.iter().enumerate().skip(1) {
            let value = if cell.trim().is_empty() {
                None
            } else {
                Some(parse_number(cell).ok_or_else(|| IngestError::NonNumericCell {
                    row: r + 1,
                    column: c + 1,
                    text: cell.clone(),
                })?)
            };
            features[c - 1].values.push(value);
        }
    }

    let kind = if keys.iter().all(|k| looks_temporal(k)) {
        AxisKind::Temporal
    } else {
        AxisKind::Categorical
    };
    Ok(DataTable {
        id: id.to_string(),
        key: AxisDescriptor {
            dimension: if key_dim.is_empty() { "key".into() } else { key_dim },
            unit: key_unit,
            kind,
            domain: AxisDomain::Values(keys),
        },
        features,
    })
}

/// Temporal keys give line charts, categorical keys give bar charts.
pub fn infer_chart_kind(table: &DataTable, feature: &str) -> Result<ChartKind, IngestError> {
    table.find_feature(feature)?;
    Ok(match table.key.kind {
        AxisKind::Temporal => ChartKind::Line,
        _ => ChartKind::Bar,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=", alias = "≤")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=", alias = "≥")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Comparator {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Eq => lhs == rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Gt => lhs > rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub feature: String,
    pub cmp: Comparator,
    pub value: f64,
}

/// Which features of a table to turn into charts.
///
/// A feature is selected when its group path starts with `group_path` and
/// every predicate holds. A predicate names a feature; it is evaluated
/// against the feature of that name in the candidate's own group, comparing
/// that feature's mean over the key domain. Grouped tables read as one
/// entity per group ("SUVs whose fuel efficiency exceeds 15").
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SelectionQuery {
    #[serde(rename = "tableId")]
    pub table_id: String,
    #[serde(default, rename = "groupPath")]
    pub group_path: Vec<String>,
    #[serde(default)]
    pub predicates: Vec<Predicate>,
}

fn predicate_holds(table: &DataTable, candidate: &FeatureColumn, p: &Predicate) -> bool {
    table
        .features
        .iter()
        .find(|f| f.name == p.feature && f.group_path == candidate.group_path)
        .and_then(FeatureColumn::mean)
        .is_some_and(|m| p.cmp.holds(m, p.value))
}

/// Default chart title: `<group tail> — <feature>`.
pub fn default_title(f: &FeatureColumn) -> String {
    match f.group_path.last() {
        Some(tail) => format!("{tail} — {}", f.name),
        None => f.name.clone(),
    }
}

/// Chart atom for one feature column, keyed by the table's first column.
pub fn feature_atom(table: &DataTable, f: &FeatureColumn, id: NodeId) -> ChartAtom {
    let kind = match table.key.kind {
        AxisKind::Temporal => ChartKind::Line,
        _ => ChartKind::Bar,
    };
    let points = table
        .keys()
        .iter()
        .zip(&f.values)
        .map(|(k, v)| DataPoint::new(k.clone(), *v))
        .collect();
    ChartAtom {
        id,
        kind,
        series: vec![DataSeries {
            name: f.name.clone(),
            x: table.key.clone(),
            y: AxisDescriptor {
                dimension: "value".into(),
                unit: f.unit.clone(),
                kind: AxisKind::Quantitative,
                domain: AxisDomain::range_of(f.values.iter().flatten().copied()),
            },
            points,
        }],
        title: default_title(f),
        annotation: None,
        source_ref: Some(SourceRef {
            table: table.id.clone(),
            column: f.column_path(),
        }),
    }
}

/// One chart atom per selected feature, in column order, with ids
/// `atom-1`, `atom-2`, ... (callers renumber when attaching).
pub fn select_charts(
    table: &DataTable,
    query: &SelectionQuery,
) -> Result<Vec<ChartAtom>, IngestError> {
    if query.table_id != table.id {
        return Err(IngestError::WrongTable {
            expected: query.table_id.clone(),
            found: table.id.clone(),
        });
    }
    if !query.group_path.is_empty()
        && !table
            .features
            .iter()
            .any(|f| f.group_path.starts_with(&query.group_path))
    {
        return Err(IngestError::UnknownGroupPath(query.group_path.join("/")));
    }
    for p in &query.predicates {
        if !table.features.iter().any(|f| f.name == p.feature) {
            return Err(IngestError::UnknownFeature(p.feature.clone()));
        }
    }
    Ok(table
        .features
        .iter()
        .filter(|f| f.group_path.starts_with(&query.group_path))
        .filter(|f| query.predicates.iter().all(|p| predicate_holds(table, f, p)))
        .enumerate()
        .map(|(i, f)| feature_atom(table, f, NodeId::new(format!("atom-{}", i + 1))))
        .collect())
}
