//! Generators shared by the property and acceptance suites.
#![allow(dead_code)]

use drillboards_core::aggregation::{Merge, MergeOp};
use drillboards_core::document::{DrillboardDocument, Mutation};
use drillboards_core::hierarchy::{drill_down, top_view, Hierarchy, View};
use drillboards_core::ingest::{parse_table, DataTable, TableFormat};
use drillboards_core::model::{
    ArithmeticOp, AxisDescriptor, AxisDomain, AxisKind, AxisPolicy, ChartAtom, ChartKind,
    DataPoint, DataSeries, LabelStat, Node, NodeId, Pile, Representation,
};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn years(n: usize) -> Vec<String> {
    (0..n).map(|i| (2000 + i).to_string()).collect()
}

pub fn series(name: &str, keys: &[String], ys: &[Option<f64>], dim: &str) -> DataSeries {
    DataSeries {
        name: name.into(),
        x: AxisDescriptor {
            dimension: "year".into(),
            unit: None,
            kind: AxisKind::Temporal,
            domain: AxisDomain::Values(keys.to_vec()),
        },
        y: AxisDescriptor {
            dimension: dim.into(),
            unit: None,
            kind: AxisKind::Quantitative,
            domain: AxisDomain::range_of(ys.iter().flatten().copied()),
        },
        points: keys
            .iter()
            .zip(ys)
            .map(|(k, y)| DataPoint::new(k.clone(), *y))
            .collect(),
    }
}

pub fn atom_node(id: &str, kind: ChartKind, s: DataSeries) -> Node {
    Node::Atom(ChartAtom {
        id: id.into(),
        kind,
        series: vec![s],
        title: id.into(),
        annotation: None,
        source_ref: None,
    })
}

pub fn leaf(id: &str) -> Node {
    let keys = years(1);
    atom_node(id, ChartKind::Line, series(id, &keys, &[Some(1.0)], "value"))
}

/// A random forest over `leaves` atoms: contiguous runs of the current roots
/// are grouped into piles until a random stopping point.
pub fn random_hierarchy<R: Rng>(rng: &mut R, leaves: usize) -> Hierarchy {
    let mut nodes: Vec<Node> = (0..leaves).map(|i| leaf(&format!("a{i}"))).collect();
    let mut roots: Vec<NodeId> = (0..leaves).map(|i| NodeId::new(format!("a{i}"))).collect();
    let merges = rng.gen_range(0..leaves.max(1));
    for p in 0..merges {
        if roots.len() < 2 {
            break;
        }
        let k = rng.gen_range(2..=roots.len().min(6));
        let start = rng.gen_range(0..=roots.len() - k);
        let children: Vec<NodeId> = roots.splice(start..start + k, []).collect();
        let id = NodeId::new(format!("p{p}"));
        nodes.push(Node::Pile(Pile {
            id: id.clone(),
            children,
            representation: Representation::Juxtaposed {},
            title: id.to_string(),
            annotation: None,
        }));
        roots.insert(start, id);
    }
    Hierarchy::new(nodes, roots).expect("generated hierarchy is well formed")
}

/// A valid view reached by random drills from the top view.
pub fn random_view<R: Rng>(rng: &mut R, h: &Hierarchy) -> View {
    let mut v = top_view(h);
    for _ in 0..rng.gen_range(0..h.len() + 1) {
        let piles: Vec<NodeId> = v
            .members
            .iter()
            .filter(|m| h.get(m.as_str()).is_some_and(Node::is_pile))
            .cloned()
            .collect();
        let Some(p) = piles.choose(rng) else { break };
        v = drill_down(h, &v, p).expect("drilling a member pile");
    }
    v
}

/// A random numeric table with `features` columns over `rows` years.
pub fn random_table<R: Rng>(rng: &mut R, id: &str, features: usize, rows: usize) -> DataTable {
    let units = ["USD", "kg", "m"];
    let grouped = rng.gen_bool(0.5);
    let mut csv = String::new();
    if grouped {
        csv.push_str("");
        for f in 0..features {
            csv.push_str(&format!(",g{}", f % 3));
        }
        csv.push('\n');
    }
    csv.push_str("year");
    for f in 0..features {
        csv.push_str(&format!(",f{f} [{}]", units.choose(rng).unwrap()));
    }
    csv.push('\n');
    for r in 0..rows {
        csv.push_str(&(1990 + r).to_string());
        for _ in 0..features {
            csv.push(',');
            if rng.gen_bool(0.9) {
                let v: f64 = if rng.gen_bool(0.5) {
                    rng.gen_range(-50i32..50) as f64
                } else {
                    rng.gen_range(-1e3..1e3)
                };
                csv.push_str(&v.to_string());
            }
        }
        csv.push('\n');
    }
    parse_table(id, csv.as_bytes(), TableFormat::Csv, if grouped { 2 } else { 1 })
        .expect("generated table parses")
}

pub fn random_merge_op<R: Rng>(rng: &mut R, nodes: &[NodeId]) -> MergeOp {
    match rng.gen_range(0..6) {
        0 => MergeOp::Label {
            stat: *[LabelStat::Mean, LabelStat::Median, LabelStat::Min, LabelStat::Max]
                .choose(rng)
                .unwrap(),
            text: None,
        },
        1 => MergeOp::Summarize {
            arithmetic: *[
                ArithmeticOp::Add,
                ArithmeticOp::Subtract,
                ArithmeticOp::Multiply,
                ArithmeticOp::Divide,
                ArithmeticOp::Average,
            ]
            .choose(rng)
            .unwrap(),
        },
        2 => MergeOp::Archetype {
            chosen: nodes.choose(rng).unwrap().clone(),
        },
        3 => MergeOp::Project,
        4 => MergeOp::Juxtapose,
        _ => MergeOp::Overlay {
            axis_policy: *[AxisPolicy::SharedY, AxisPolicy::DualY].choose(rng).unwrap(),
        },
    }
}

/// A random document: a random table, a few random merges over the roots
/// (failed merges are skipped), annotations, and saved views.
pub fn random_document<R: Rng>(rng: &mut R, id: &str) -> DrillboardDocument {
    let features = rng.gen_range(2..12);
    let rows = rng.gen_range(1..8);
    let table = random_table(rng, "t", features, rows);
    let mut doc = DrillboardDocument::from_table(id, &format!("Board {id}"), table).unwrap();
    for _ in 0..rng.gen_range(0..features) {
        let roots = doc.hierarchy.roots().to_vec();
        if roots.len() < 2 {
            break;
        }
        let k = rng.gen_range(2..=roots.len().min(4));
        let nodes: Vec<NodeId> = roots.choose_multiple(rng, k).cloned().collect();
        let mut merge = Merge::new(random_merge_op(rng, &nodes), nodes);
        if rng.gen_bool(0.3) {
            merge.annotation = Some("note, with \"quotes\"\nand lines".into());
        }
        if let Ok((next, _)) = doc.apply(&Mutation::Merge(merge)) {
            doc = next;
        }
    }
    for i in 0..rng.gen_range(0..3) {
        let v = random_view(rng, &doc.hierarchy);
        doc = doc.define_view(&format!("view-{i}"), v).unwrap();
    }
    doc
}
