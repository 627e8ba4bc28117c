//! The persisted drillboard: tables, hierarchy, saved views and layout
//! settings, plus the authoring mutations that produce new revisions.
//!
//! On disk a document is a single JSON file:
//!
//! ```json
//! { "schemaVersion": 1, "id": "...", "title": "...", "revision": 3, "readOnly": false,
//!   "tables": [...], "atoms": [...], "piles": [...], "rootOrder": [...],
//!   "views": [{"label": "novice", "members": [...]}], "layoutConfig": {...} }
//! ```
//!
//! Atoms are written in leaf order and piles in post-order, so saving the
//! same document twice yields identical bytes. Tables are either inline or
//! reference a sibling CSV/TSV file by relative path.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::{apply_merge, split, AggregationError, Merge};
use crate::hierarchy::{
    bottom_view, check_view, drill_down, top_view, Hierarchy, HierarchyError, PredefinedView,
    View, BOTTOM_LABEL, TOP_LABEL,
};
use crate::ingest::{parse_table, select_charts, DataTable, IngestError, SelectionQuery, TableFormat};
use crate::layout::LayoutConfig;
use crate::model::{ChartAtom, Node, NodeId, Pile, Representation};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    SchemaVersionMismatch { found: u64 },
    #[error("integrity violation: {0}")]
    IntegrityViolation(String),
    #[error("document is read-only")]
    ReadOnly,
    #[error("pile `{pile}` is used by saved views: {}", .labels.join(", "))]
    ReferencedByView { pile: NodeId, labels: Vec<String> },
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// A table referenced by path instead of stored inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TableFile {
    pub path: String,
    pub format: TableFormat,
    pub header_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub table: DataTable,
    pub file: Option<TableFile>,
}

impl TableEntry {
    pub fn inline(table: DataTable) -> Self {
        TableEntry { table, file: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrillboardDocument {
    pub id: String,
    pub title: String,
    pub tables: Vec<TableEntry>,
    pub hierarchy: Hierarchy,
    pub views: Vec<PredefinedView>,
    pub layout: LayoutConfig,
    pub revision: u64,
    pub read_only: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TableRecord {
    File {
        id: String,
        #[serde(flatten)]
        file: TableFile,
    },
    Inline(DataTable),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct DocumentFile {
    schema_version: u64,
    id: String,
    title: String,
    #[serde(default)]
    revision: u64,
    #[serde(default)]
    read_only: bool,
    #[serde(default)]
    tables: Vec<TableRecord>,
    atoms: Vec<ChartAtom>,
    #[serde(default)]
    piles: Vec<Pile>,
    root_order: Vec<NodeId>,
    #[serde(default)]
    views: Vec<PredefinedView>,
    #[serde(default)]
    layout_config: LayoutConfig,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct VersionProbe {
    schema_version: Option<u64>,
}

/// Serializes a document to its canonical JSON bytes.
pub fn save_document(doc: &DrillboardDocument) -> Vec<u8> {
    let file = DocumentFile {
        schema_version: SCHEMA_VERSION as u64,
        id: doc.id.clone(),
        title: doc.title.clone(),
        revision: doc.revision,
        read_only: doc.read_only,
        tables: doc
            .tables
            .iter()
            .map(|t| match &t.file {
                Some(f) => TableRecord::File {
                    id: t.table.id.clone(),
                    file: f.clone(),
                },
                None => TableRecord::Inline(t.table.clone()),
            })
            .collect(),
        atoms: doc.hierarchy.atoms().cloned().collect(),
        piles: doc
            .hierarchy
            .piles_post_order()
            .into_iter()
            .cloned()
            .collect(),
        root_order: doc.hierarchy.roots().to_vec(),
        views: doc.views.clone(),
        layout_config: doc.layout.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&file).expect("documents serialize");
    bytes.push(b'\n');
    bytes
}

/// Parses a document whose tables are all inline.
pub fn load_document(bytes: &[u8]) -> Result<DrillboardDocument, DocumentError> {
    load_with_base(bytes, None)
}

/// Loads a document from disk, resolving table paths against its directory.
pub fn load_document_from_path(path: &Path) -> Result<DrillboardDocument, DocumentError> {
    let bytes = std::fs::read(path)?;
    load_with_base(&bytes, Some(path.parent().unwrap_or(Path::new("."))))
}

fn load_with_base(bytes: &[u8], base: Option<&Path>) -> Result<DrillboardDocument, DocumentError> {
    let probe: VersionProbe =
        serde_json::from_slice(bytes).map_err(|e| DocumentError::Malformed(e.to_string()))?;
    match probe.schema_version {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(DocumentError::SchemaVersionMismatch { found: v }),
        None => return Err(DocumentError::Malformed("missing schemaVersion".into())),
    }
    let file: DocumentFile =
        serde_json::from_slice(bytes).map_err(|e| DocumentError::Malformed(e.to_string()))?;

    let mut tables = Vec::with_capacity(file.tables.len());
    for record in file.tables {
        tables.push(match record {
            TableRecord::Inline(table) => TableEntry::inline(table),
            TableRecord::File { id, file } => {
                let base = base.ok_or_else(|| {
                    DocumentError::IntegrityViolation(format!(
                        "table `{id}` references `{}`; load the document from a path",
                        file.path
                    ))
                })?;
                let data = std::fs::read(base.join(&file.path))?;
                let table = parse_table(&id, &data, file.format, file.header_rows)?;
                TableEntry {
                    table,
                    file: Some(file),
                }
            }
        });
    }

    let nodes = file
        .atoms
        .into_iter()
        .map(Node::Atom)
        .chain(file.piles.into_iter().map(Node::Pile));
    let hierarchy = Hierarchy::new(nodes, file.root_order)
        .map_err(|e| DocumentError::IntegrityViolation(e.to_string()))?;
    let doc = DrillboardDocument {
        id: file.id,
        title: file.title,
        tables,
        hierarchy,
        views: file.views,
        layout: file.layout_config,
        revision: file.revision,
        read_only: file.read_only,
    };
    doc.check_integrity()
        .map_err(DocumentError::IntegrityViolation)?;
    Ok(doc)
}

/// Outcome of an authoring mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MutationOutcome {
    pub revision: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub created: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Mutation {
    Merge(Merge),
    #[serde(rename_all = "camelCase")]
    Split {
        pile_id: NodeId,
        /// Replace the pile by its children in saved views that use it.
        #[serde(default)]
        repair_views: bool,
    },
    #[serde(rename_all = "camelCase")]
    Rename { node_id: NodeId, title: String },
    #[serde(rename_all = "camelCase")]
    Annotate {
        node_id: NodeId,
        #[serde(default)]
        text: Option<String>,
    },
    /// Saves `view`, or the author's working view (the roots) when absent.
    DefineView {
        label: String,
        #[serde(default)]
        view: Option<Vec<NodeId>>,
    },
    DeleteView { label: String },
    AddCharts { query: SelectionQuery },
}

impl DrillboardDocument {
    /// A document whose hierarchy is one root atom per feature of `table`.
    pub fn from_table(id: &str, title: &str, table: DataTable) -> Result<Self, DocumentError> {
        let query = SelectionQuery {
            table_id: table.id.clone(),
            ..SelectionQuery::default()
        };
        let atoms = select_charts(&table, &query)?;
        let roots = atoms.iter().map(|a| a.id.clone()).collect();
        let hierarchy = Hierarchy::new(atoms.into_iter().map(Node::Atom), roots)?;
        Ok(DrillboardDocument {
            id: id.to_string(),
            title: title.to_string(),
            tables: vec![TableEntry::inline(table)],
            hierarchy,
            views: Vec::new(),
            layout: LayoutConfig::default(),
            revision: 0,
            read_only: false,
        })
    }

    pub fn table(&self, id: &str) -> Option<&DataTable> {
        self.tables.iter().map(|t| &t.table).find(|t| t.id == id)
    }

    /// Labels readers can choose from, implicit ones first.
    pub fn view_labels(&self) -> Vec<String> {
        let mut labels = vec![TOP_LABEL.to_string(), BOTTOM_LABEL.to_string()];
        labels.extend(self.views.iter().map(|v| v.label.clone()));
        labels
    }

    pub fn resolve_view(&self, label: &str) -> Result<View, HierarchyError> {
        match label {
            TOP_LABEL => Ok(top_view(&self.hierarchy)),
            BOTTOM_LABEL => Ok(bottom_view(&self.hierarchy)),
            _ => self
                .views
                .iter()
                .find(|v| v.label == label)
                .map(|v| v.view.clone())
                .ok_or_else(|| HierarchyError::UnknownView(label.to_string())),
        }
    }

    /// Checks the invariants a loaded document must satisfy. Returns the
    /// first problem found.
    pub fn check_integrity(&self) -> Result<(), String> {
        for t in &self.tables {
            t.table
                .validate()
                .map_err(|e| format!("table `{}`: {e}", t.table.id))?;
        }
        for atom in self.hierarchy.atoms() {
            atom.validate()?;
            if let Some(src) = &atom.source_ref {
                let table = self
                    .table(&src.table)
                    .ok_or_else(|| format!("atom `{}` references unknown table `{}`", atom.id, src.table))?;
                if !table.features.iter().any(|f| f.column_path() == src.column) {
                    return Err(format!(
                        "atom `{}` references unknown column `{}`",
                        atom.id,
                        src.column.join("/")
                    ));
                }
            }
        }
        for pile in self.hierarchy.piles_post_order() {
            match &pile.representation {
                Representation::Archetype { child_id } if !pile.children.contains(child_id) => {
                    return Err(format!(
                        "pile `{}` archetype `{child_id}` is not a child",
                        pile.id
                    ));
                }
                Representation::Summarized { series, operands, .. } => {
                    if operands.len() != pile.children.len()
                        || operands.iter().any(|o| !pile.children.contains(o))
                    {
                        return Err(format!("pile `{}` operands differ from children", pile.id));
                    }
                    series.validate().map_err(|e| format!("pile `{}`: {e}", pile.id))?;
                }
                _ => {}
            }
        }
        let mut labels = std::collections::HashSet::new();
        for v in &self.views {
            if v.label == TOP_LABEL || v.label == BOTTOM_LABEL || !labels.insert(&v.label) {
                return Err(format!("view label `{}` is duplicated or reserved", v.label));
            }
            check_view(&self.hierarchy, &v.view)
                .map_err(|e| format!("view `{}`: {e}", v.label))?;
        }
        Ok(())
    }

    fn next_revision(&self, hierarchy: Hierarchy, views: Vec<PredefinedView>) -> DrillboardDocument {
        DrillboardDocument {
            hierarchy,
            views,
            revision: self.revision + 1,
            ..self.clone()
        }
    }

    /// Saves a labelled view. `top` and `bottom` are always defined.
    pub fn define_view(&self, label: &str, view: View) -> Result<DrillboardDocument, DocumentError> {
        if label == TOP_LABEL
            || label == BOTTOM_LABEL
            || self.views.iter().any(|v| v.label == label)
        {
            return Err(HierarchyError::DuplicateLabel(label.to_string()).into());
        }
        check_view(&self.hierarchy, &view)?;
        let mut views = self.views.clone();
        views.push(PredefinedView {
            label: label.to_string(),
            view,
        });
        Ok(self.next_revision(self.hierarchy.clone(), views))
    }

    /// Applies one authoring mutation, producing the next revision.
    pub fn apply(&self, mutation: &Mutation) -> Result<(DrillboardDocument, MutationOutcome), DocumentError> {
        if self.read_only {
            return Err(DocumentError::ReadOnly);
        }
        let mut created = Vec::new();
        let doc = match mutation {
            Mutation::Merge(merge) => {
                let (h, pile) = apply_merge(&self.hierarchy, merge, &self.layout.aggregation)?;
                created.push(pile);
                let views = self
                    .views
                    .iter()
                    .map(|v| PredefinedView {
                        label: v.label.clone(),
                        view: v.view.normalized(&h),
                    })
                    .collect();
                self.next_revision(h, views)
            }
            Mutation::Split {
                pile_id,
                repair_views,
            } => {
                let users: Vec<String> = self
                    .views
                    .iter()
                    .filter(|v| v.view.contains(pile_id))
                    .map(|v| v.label.clone())
                    .collect();
                if !users.is_empty() && !repair_views {
                    return Err(DocumentError::ReferencedByView {
                        pile: pile_id.clone(),
                        labels: users,
                    });
                }
                let h = split(&self.hierarchy, pile_id)?;
                let views = self
                    .views
                    .iter()
                    .map(|v| {
                        let view = if v.view.contains(pile_id) {
                            drill_down(&self.hierarchy, &v.view, pile_id)?
                        } else {
                            v.view.clone()
                        };
                        Ok(PredefinedView {
                            label: v.label.clone(),
                            view,
                        })
                    })
                    .collect::<Result<Vec<_>, HierarchyError>>()?;
                self.next_revision(h, views)
            }
            Mutation::Rename { node_id, title } => {
                let h = self
                    .hierarchy
                    .with_node_edit(node_id, |n| n.set_title(title.clone()))?;
                self.next_revision(h, self.views.clone())
            }
            Mutation::Annotate { node_id, text } => {
                let h = self
                    .hierarchy
                    .with_node_edit(node_id, |n| n.set_annotation(text.clone()))?;
                self.next_revision(h, self.views.clone())
            }
            Mutation::DefineView { label, view } => {
                let view = match view {
                    Some(members) => View {
                        members: members.clone(),
                    },
                    None => top_view(&self.hierarchy),
                };
                self.define_view(label, view)?
            }
            Mutation::DeleteView { label } => {
                if !self.views.iter().any(|v| &v.label == label) {
                    return Err(HierarchyError::UnknownView(label.clone()).into());
                }
                let views = self
                    .views
                    .iter()
                    .filter(|v| &v.label != label)
                    .cloned()
                    .collect();
                self.next_revision(self.hierarchy.clone(), views)
            }
            Mutation::AddCharts { query } => {
                let table = self
                    .table(&query.table_id)
                    .ok_or_else(|| DocumentError::UnknownTable(query.table_id.clone()))?;
                let mut atoms = select_charts(table, query)?;
                let mut h = self.hierarchy.clone();
                for atom in &mut atoms {
                    atom.id = h.fresh_id("atom");
                    created.push(atom.id.clone());
                    h = h.with_atoms(vec![atom.clone()])?;
                }
                // new atoms are roots at the end; saved views must keep covering them
                let views = self
                    .views
                    .iter()
                    .map(|v| {
                        let mut view = v.view.clone();
                        view.members.extend(created.iter().cloned());
                        PredefinedView {
                            label: v.label.clone(),
                            view,
                        }
                    })
                    .collect();
                self.next_revision(h, views)
            }
        };
        let outcome = MutationOutcome {
            revision: doc.revision,
            created,
        };
        Ok((doc, outcome))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::MergeOp;
    use crate::ingest::parse_table;
    use crate::model::{ArithmeticOp, LabelStat};

    fn table() -> DataTable {
        parse_table(
            "funds",
            b"year,oecd,ocha,wb,imf,un,eu\n2008,1,2,3,4,5,6\n2009,2,3,,5,6,7\n",
            TableFormat::Csv,
            1,
        )
        .unwrap()
    }

    fn doc() -> DrillboardDocument {
        DrillboardDocument::from_table("d1", "Funds", table()).unwrap()
    }

    fn merge(op: MergeOp, nodes: &[&str]) -> Mutation {
        Mutation::Merge(Merge::new(op, nodes.iter().copied()))
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let (d, _) = doc()
            .apply(&merge(MergeOp::Summarize { arithmetic: ArithmeticOp::Add }, &["atom-1", "atom-2"]))
            .unwrap();
        let (d, _) = d.apply(&Mutation::DefineView { label: "novice".into(), view: None }).unwrap();
        let (d, _) = d
            .apply(&Mutation::Annotate { node_id: "atom-3".into(), text: Some("gap in 2009".into()) })
            .unwrap();
        let bytes = save_document(&d);
        let loaded = load_document(&bytes).unwrap();
        assert_eq!(loaded, d);
        assert_eq!(save_document(&loaded), bytes);
    }

    #[test]
    fn rejects_future_schema_and_dangling_children() {
        let bytes = save_document(&doc());
        let mut json: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        json["schemaVersion"] = 2.into();
        assert!(matches!(
            load_document(json.to_string().as_bytes()),
            Err(DocumentError::SchemaVersionMismatch { found: 2 })
        ));

        let (d, _) = doc()
            .apply(&merge(MergeOp::Juxtapose, &["atom-1", "atom-2"]))
            .unwrap();
        let mut json: serde_json::Value = serde_json::from_slice(&save_document(&d)).unwrap();
        json["piles"][0]["children"][1] = "atom-99".into();
        assert!(matches!(
            load_document(json.to_string().as_bytes()),
            Err(DocumentError::IntegrityViolation(_))
        ));
    }

    #[test]
    fn rejects_invalid_saved_view() {
        let (d, _) = doc().apply(&Mutation::DefineView { label: "all".into(), view: None }).unwrap();
        let mut json: serde_json::Value = serde_json::from_slice(&save_document(&d)).unwrap();
        json["views"][0]["members"].as_array_mut().unwrap().pop();
        assert!(matches!(
            load_document(json.to_string().as_bytes()),
            Err(DocumentError::IntegrityViolation(_))
        ));
    }

    #[test]
    fn define_view_rules() {
        let d = doc();
        let (d, out) = d.apply(&Mutation::DefineView { label: "novice".into(), view: None }).unwrap();
        assert_eq!(out.revision, 1);
        assert!(d.view_labels().contains(&"novice".to_string()));
        assert!(matches!(
            d.apply(&Mutation::DefineView { label: "novice".into(), view: None }),
            Err(DocumentError::Hierarchy(HierarchyError::DuplicateLabel(_)))
        ));
        assert!(matches!(
            d.apply(&Mutation::DefineView { label: "top".into(), view: None }),
            Err(DocumentError::Hierarchy(HierarchyError::DuplicateLabel(_)))
        ));
        assert!(matches!(
            d.apply(&Mutation::DefineView { label: "x".into(), view: Some(vec!["atom-1".into()]) }),
            Err(DocumentError::Hierarchy(HierarchyError::InvalidView(_)))
        ));
    }

    #[test]
    fn split_guards_saved_views() {
        let (d, out) = doc()
            .apply(&merge(MergeOp::Label { stat: LabelStat::Max, text: None }, &["atom-1", "atom-2"]))
            .unwrap();
        let pile = out.created[0].clone();
        let (d, _) = d.apply(&Mutation::DefineView { label: "novice".into(), view: None }).unwrap();
        let split = Mutation::Split { pile_id: pile.clone(), repair_views: false };
        assert!(matches!(d.apply(&split), Err(DocumentError::ReferencedByView { .. })));
        let (d2, _) = d
            .apply(&Mutation::Split { pile_id: pile, repair_views: true })
            .unwrap();
        assert_eq!(d2.resolve_view("novice").unwrap().len(), 6);
    }

    #[test]
    fn add_charts_extends_views() {
        let (d, _) = doc().apply(&Mutation::DefineView { label: "v".into(), view: None }).unwrap();
        let q = SelectionQuery { table_id: "funds".into(), ..Default::default() };
        let (d, out) = d.apply(&Mutation::AddCharts { query: q }).unwrap();
        assert_eq!(out.created.len(), 6);
        assert_eq!(out.created[0], NodeId::from("atom-7"));
        assert_eq!(d.resolve_view("v").unwrap().len(), 12);
        assert!(d.check_integrity().is_ok());
    }

    #[test]
    fn merge_reorders_saved_views() {
        let (d, _) = doc().apply(&Mutation::DefineView { label: "v".into(), view: None }).unwrap();
        let (d, _) = d.apply(&merge(MergeOp::Juxtapose, &["atom-1", "atom-3"])).unwrap();
        let v = d.resolve_view("v").unwrap();
        assert_eq!(v.members[..3], [NodeId::from("atom-1"), "atom-3".into(), "atom-2".into()]);
        assert!(d.check_integrity().is_ok());
    }

    #[test]
    fn read_only_rejects_mutations() {
        let mut d = doc();
        d.read_only = true;
        assert!(matches!(
            d.apply(&Mutation::DeleteView { label: "x".into() }),
            Err(DocumentError::ReadOnly)
        ));
    }

    #[test]
    fn mutation_wire_format() {
        let m: Mutation = serde_json::from_str(
            r#"{"type":"merge","op":"archetype","chosen":"a","nodes":["a","b"]}"#,
        )
        .unwrap();
        assert!(matches!(m, Mutation::Merge(_)));
        let m: Mutation =
            serde_json::from_str(r#"{"type":"split","pileId":"pile-1","repairViews":true}"#).unwrap();
        assert_eq!(m, Mutation::Split { pile_id: "pile-1".into(), repair_views: true });
        let m: Mutation = serde_json::from_str(
            r#"{"type":"addCharts","query":{"tableId":"t","groupPath":["SUV"],"predicates":[{"feature":"fuel","cmp":">","value":15}]}}"#,
        )
        .unwrap();
        assert!(matches!(m, Mutation::AddCharts { .. }));
    }

    #[test]
    fn table_files_resolve_relative_to_document() {
        let dir = std::env::temp_dir().join(format!("drillboards-doc-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("funds.csv"), table().to_csv()).unwrap();
        let mut d = doc();
        d.tables[0].file = Some(TableFile {
            path: "funds.csv".into(),
            format: TableFormat::Csv,
            header_rows: 1,
        });
        let bytes = save_document(&d);
        std::fs::write(dir.join("board.json"), &bytes).unwrap();
        let loaded = load_document_from_path(&dir.join("board.json")).unwrap();
        assert_eq!(loaded, d);
        assert!(matches!(load_document(&bytes), Err(DocumentError::IntegrityViolation(_))));
        std::fs::remove_dir_all(&dir).ok();
    }
}
