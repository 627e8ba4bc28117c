//! Acceptance gate. Each criterion prints one PASS/FAIL line; the test fails
//! if any criterion does. Run with `cargo test --test acceptance -- --nocapture`.

mod common;

use std::time::{Duration, Instant};

use common::*;
use drillboards_core::aggregation::{
    applicable_ops, apply_merge, AggregationConfig, AggregationError, Merge, MergeOp, OpKind,
};
use drillboards_core::document::{load_document, save_document, DocumentError, Mutation};
use drillboards_core::fuzz::fuzz_views;
use drillboards_core::hierarchy::{
    bottom_view, drill_down, top_view, validate_view, Hierarchy, View,
};
use drillboards_core::ingest::{parse_table, TableFormat};
use drillboards_core::layout::{auto_rollup, layout_view, LayoutConfig, LayoutMode, Viewport};
use drillboards_core::model::{
    ArithmeticOp, AxisPolicy, ChartKind, LabelStat, Node, NodeId, Representation,
};
use drillboards_core::script::{build_document, MergeScript, ScriptStep};
use drillboards_core::session::{apply_action, open_session, Action};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn numeric_table(features: usize) -> drillboards_core::ingest::DataTable {
    let mut csv = String::from("year");
    for f in 1..=features {
        csv.push_str(&format!(",c{f} [USD]"));
    }
    csv.push('\n');
    for y in 0..4 {
        csv.push_str(&(2020 + y).to_string());
        for f in 1..=features {
            csv.push_str(&format!(",{}", f * 10 + y));
        }
        csv.push('\n');
    }
    parse_table("synthetic", csv.as_bytes(), TableFormat::Csv, 1).unwrap()
}

fn step(op: MergeOp, nodes: Vec<NodeId>, save: Option<&str>) -> ScriptStep {
    ScriptStep {
        merge: Merge::new(op, nodes),
        save_view_after: save.map(str::to_string),
    }
}

fn ids(range: std::ops::RangeInclusive<usize>) -> Vec<NodeId> {
    range.map(|i| NodeId::new(format!("atom-{i}"))).collect()
}

/// Drills every pile until only atoms remain.
fn drill_everything(h: &Hierarchy, mut v: View) -> View {
    while let Some(p) = v
        .members
        .iter()
        .find(|m| h.get(m.as_str()).is_some_and(Node::is_pile))
        .cloned()
    {
        v = drill_down(h, &v, &p).unwrap();
    }
    v
}

fn four_step_replay() -> Outcome {
    let start = Instant::now();
    let steps = vec![
        step(
            MergeOp::Summarize { arithmetic: ArithmeticOp::Add },
            ids(1..=2),
            None,
        ),
        step(
            MergeOp::Archetype { chosen: "pile-1".into() },
            vec!["pile-1".into(), "atom-3".into()],
            None,
        ),
        step(
            MergeOp::Label { stat: LabelStat::Max, text: None },
            ids(4..=6),
            None,
        ),
        step(
            MergeOp::Archetype { chosen: "pile-2".into() },
            vec!["pile-2".into(), "pile-3".into()],
            None,
        ),
    ];
    let table = numeric_table(6);
    let mut sizes = vec![6];
    for k in 1..=steps.len() {
        let script = MergeScript {
            steps: steps[..k].to_vec(),
            ..MergeScript::default()
        };
        let doc = build_document(table.clone(), &script).map_err(|e| e.to_string())?;
        sizes.push(top_view(&doc.hierarchy).len());
    }
    ensure(sizes == [6, 5, 4, 2, 1], || format!("working view sizes {sizes:?}"))?;
    let script = MergeScript {
        steps,
        ..MergeScript::default()
    };
    let doc = build_document(table, &script).map_err(|e| e.to_string())?;
    let h = &doc.hierarchy;
    ensure(bottom_view(h).len() == 6, || "bottom view is not 6".into())?;
    let leaves = drill_everything(h, top_view(h));
    ensure(leaves.members == ids(1..=6), || format!("drilled to {:?}", leaves.members))?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("sizes {sizes:?}, bottom 6, exhaustive drill gives atom-1..6 in {:?}", start.elapsed()))
}

fn expert_novice_counts() -> Outcome {
    let start = Instant::now();
    let mut steps = Vec::new();
    // 11 add merges of four atoms: atom-1..44 -> pile-1..11
    for g in 0..11 {
        steps.push(step(
            MergeOp::Summarize { arithmetic: ArithmeticOp::Add },
            ids(g * 4 + 1..=g * 4 + 4),
            None,
        ));
    }
    // 11 archetype merges over atom-45..92: four of five, seven of four
    let mut next = 45;
    for (i, size) in [5, 5, 5, 5, 4, 4, 4, 4, 4, 4, 4].into_iter().enumerate() {
        let nodes = ids(next..=next + size - 1);
        next += size;
        let save = (i == 10).then_some("expert");
        steps.push(step(MergeOp::Archetype { chosen: nodes[0].clone() }, nodes, save));
    }
    // working view now: 11 sums, 11 archetypes, atom-93..96 = 26 roots
    let roots: Vec<NodeId> = (1..=22)
        .map(|i| NodeId::new(format!("pile-{i}")))
        .chain(ids(93..=96))
        .collect();
    let mut cursor = 0;
    for (i, size) in [5, 5, 6, 6].into_iter().enumerate() {
        let nodes = roots[cursor..cursor + size].to_vec();
        cursor += size;
        let save = (i == 3).then_some("novice");
        steps.push(step(MergeOp::Archetype { chosen: nodes[0].clone() }, nodes, save));
    }
    let script = MergeScript {
        steps,
        ..MergeScript::default()
    };
    let doc = build_document(numeric_table(96), &script).map_err(|e| e.to_string())?;
    let h = &doc.hierarchy;
    let count = |kind: &str| {
        h.piles_post_order()
            .iter()
            .filter(|p| {
                matches!(
                    (&p.representation, kind),
                    (Representation::Archetype { .. }, "archetype")
                        | (Representation::Summarized { op: ArithmeticOp::Add, .. }, "add")
                )
            })
            .count()
    };
    ensure(count("archetype") == 15 && count("add") == 11, || {
        format!("{} archetype, {} add merges", count("archetype"), count("add"))
    })?;
    ensure(bottom_view(h).len() == 96, || "bottom view is not 96".into())?;
    let expert = doc.resolve_view("expert").map_err(|e| e.to_string())?;
    let novice = doc.resolve_view("novice").map_err(|e| e.to_string())?;
    ensure(expert.len() == 26 && novice.len() == 8, || {
        format!("expert {}, novice {}", expert.len(), novice.len())
    })?;
    ensure(
        validate_view(h, &expert).is_empty() && validate_view(h, &novice).is_empty(),
        || "a saved view fails validate_view".into(),
    )?;
    let s = open_session(&doc, "reader", Some("novice"), None).map_err(|e| e.to_string())?;
    let s = apply_action(&doc, &s, &Action::Jump { view: "expert".into() })
        .map_err(|e| e.to_string())?;
    ensure(s.current_view.len() == 26, || format!("jump gave {}", s.current_view.len()))?;
    within(start, Duration::from_secs(5))?;
    Ok(format!("96 leaves, 15 archetype + 11 add, novice 8, expert 26 in {:?}", start.elapsed()))
}

fn fuzz_run(seed: u64) -> Result<Vec<Vec<usize>>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trajectories = Vec::new();
    for i in 0..50 {
        let leaves = rng.gen_range(1..=200);
        let h = random_hierarchy(&mut rng, leaves);
        let saved: Vec<View> = (0..3).map(|_| random_view(&mut rng, &h)).collect();
        let report = fuzz_views(&h, &saved, 10_000 / 50, seed ^ i).map_err(|e| format!("hierarchy {i}: {e}"))?;
        trajectories.push(report.trajectory);
    }
    Ok(trajectories)
}

fn view_fuzz() -> Outcome {
    let start = Instant::now();
    let first = fuzz_run(42)?;
    within(start, Duration::from_secs(60))?;
    let again = fuzz_run(42)?;
    ensure(first == again, || "trajectories differ under the same seed".into())?;
    let actions: usize = first.iter().map(|t| t.len() - 1).sum();
    Ok(format!(
        "{actions} actions over 50 hierarchies, 0 violations, deterministic; one run {:?}",
        start.elapsed() / 2
    ))
}

fn arithmetic_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = AggregationConfig::default();
    let (mut checked_points, mut zero_divisions) = (0usize, 0usize);
    for pair in 0..1000 {
        let len = rng.gen_range(1..24);
        let integer = rng.gen_bool(0.5);
        let draw = |rng: &mut ChaCha8Rng| -> Option<f64> {
            match rng.gen_range(0..10) {
                0 => None,
                1 => Some(0.0),
                _ if integer => Some(rng.gen_range(-100_000i64..100_000) as f64),
                _ => Some(rng.gen_range(-1e6..1e6)),
            }
        };
        let a: Vec<Option<f64>> = (0..len).map(|_| draw(&mut rng)).collect();
        let b: Vec<Option<f64>> = (0..len).map(|_| draw(&mut rng)).collect();
        let keys = years(len);
        let h = Hierarchy::new(
            vec![
                atom_node("a", ChartKind::Line, series("a", &keys, &a, "value")),
                atom_node("b", ChartKind::Line, series("b", &keys, &b, "value")),
            ],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        for op in [
            ArithmeticOp::Add,
            ArithmeticOp::Subtract,
            ArithmeticOp::Multiply,
            ArithmeticOp::Divide,
            ArithmeticOp::Average,
        ] {
            let oracle: Vec<Option<f64>> = a
                .iter()
                .zip(&b)
                .map(|(x, y)| {
                    let (x, y) = ((*x)?, (*y)?);
                    match op {
                        ArithmeticOp::Add => Some(x + y),
                        ArithmeticOp::Subtract => Some(x - y),
                        ArithmeticOp::Multiply => Some(x * y),
                        ArithmeticOp::Divide if y == 0.0 => None,
                        ArithmeticOp::Divide => Some(x / y),
                        ArithmeticOp::Average => Some((x + y) / 2.0),
                    }
                })
                .collect();
            let merge = Merge::new(MergeOp::Summarize { arithmetic: op }, ["a", "b"]);
            let got = match apply_merge(&h, &merge, &cfg) {
                Ok((h2, pile)) => match &h2.get(pile.as_str()).unwrap().as_pile().unwrap().representation {
                    Representation::Summarized { series, .. } => {
                        series.points.iter().map(|p| p.y).collect::<Vec<_>>()
                    }
                    other => return Err(format!("pair {pair}: {} pile", other.name())),
                },
                Err(AggregationError::Disabled { .. }) | Err(AggregationError::AllNullResult)
                    if oracle.iter().all(Option::is_none) =>
                {
                    continue
                }
                Err(e) => return Err(format!("pair {pair} {op:?}: {e}")),
            };
            for (i, (g, o)) in got.iter().zip(&oracle).enumerate() {
                let ok = match (g, o) {
                    (None, None) => true,
                    (Some(g), Some(o)) if integer && matches!(op, ArithmeticOp::Add | ArithmeticOp::Subtract) => g == o,
                    (Some(g), Some(o)) => (g - o).abs() <= 1e-9 * o.abs().max(f64::MIN_POSITIVE),
                    _ => false,
                };
                ensure(ok, || format!("pair {pair} {op:?} point {i}: {g:?} vs oracle {o:?}"))?;
                checked_points += 1;
                if op == ArithmeticOp::Divide && b[i] == Some(0.0) {
                    ensure(g.is_none(), || "division by zero is not null".into())?;
                    zero_divisions += 1;
                }
            }
            if op == ArithmeticOp::Average {
                let add = a.iter().zip(&b).map(|(x, y)| Some((*x)? + (*y)?));
                for (g, s) in got.iter().zip(add) {
                    if let (Some(g), Some(s)) = (g, s) {
                        ensure((g - s / 2.0).abs() <= 1e-9 * (s / 2.0).abs(), || {
                            format!("pair {pair}: average {g} != add/2 {}", s / 2.0)
                        })?;
                    }
                }
            }
        }
    }
    Ok(format!(
        "1000 pairs x 5 ops, {checked_points} points within 1e-9, {zero_divisions} zero divisors null"
    ))
}

fn soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = AggregationConfig::default();
    let (mut combos, mut disabled, mut archetype_blocks) = (0usize, 0usize, 0usize);
    for scenario in 0..500 {
        let len = rng.gen_range(1..6);
        let mut nodes = Vec::new();
        for i in 0..4 {
            let n = if rng.gen_bool(0.85) { len } else { len + 1 };
            let dim = *["value", "value", "value", "mass", "speed"].choose(&mut rng).unwrap();
            let kind = *[ChartKind::Line, ChartKind::Line, ChartKind::Bar, ChartKind::Scatter]
                .choose(&mut rng)
                .unwrap();
            let ys: Vec<Option<f64>> = (0..n)
                .map(|_| rng.gen_bool(0.8).then(|| rng.gen_range(-3..4) as f64))
                .collect();
            let id = format!("c{i}");
            nodes.push(atom_node(&id, kind, series(&id, &years(n), &ys, dim)));
        }
        let roots: Vec<NodeId> = (0..4).map(|i| NodeId::new(format!("c{i}"))).collect();
        let mut h = Hierarchy::new(nodes, roots).unwrap();
        // sometimes pre-merge two charts into an archetype or a juxtaposition
        if rng.gen_bool(0.4) {
            let op = if rng.gen_bool(0.5) {
                MergeOp::Archetype { chosen: "c2".into() }
            } else {
                MergeOp::Juxtapose
            };
            h = apply_merge(&h, &Merge::new(op, ["c2", "c3"]), &cfg).unwrap().0;
        }
        let mut pool = h.roots().to_vec();
        pool.shuffle(&mut rng);
        let k = if rng.gen_bool(0.8) { 2 } else { pool.len().min(3) };
        let sel: Vec<NodeId> = pool[..k].to_vec();
        let avail = applicable_ops(&h, &sel, &cfg).map_err(|e| e.to_string())?;
        let has_archetype = sel.iter().any(|id| {
            matches!(
                h.get(id.as_str()).and_then(Node::as_pile).map(|p| &p.representation),
                Some(Representation::Archetype { .. })
            )
        });
        if has_archetype {
            ensure(!avail.is_enabled(OpKind::Summarize), || {
                format!("scenario {scenario}: arithmetic over an archetype is enabled")
            })?;
            archetype_blocks += 1;
        }
        let arithmetic = if k == 2 {
            *[ArithmeticOp::Add, ArithmeticOp::Subtract, ArithmeticOp::Multiply, ArithmeticOp::Average]
                .choose(&mut rng)
                .unwrap()
        } else {
            ArithmeticOp::Add
        };
        let policy = {
            let dims: std::collections::BTreeSet<&str> = sel
                .iter()
                .filter_map(|id| drillboards_core::aggregation::exposed_series(&h, id))
                .map(|e| e.series.y.dimension.as_str())
                .collect();
            if dims.len() == 2 { AxisPolicy::DualY } else { AxisPolicy::SharedY }
        };
        for op in [
            MergeOp::Label { stat: LabelStat::Mean, text: None },
            MergeOp::Summarize { arithmetic },
            MergeOp::Archetype { chosen: sel[0].clone() },
            MergeOp::Project,
            MergeOp::Juxtapose,
            MergeOp::Overlay { axis_policy: policy },
        ] {
            let kind = op.kind();
            let result = apply_merge(&h, &Merge::new(op, sel.clone()), &cfg);
            combos += 1;
            if avail.is_enabled(kind) {
                ensure(result.is_ok(), || {
                    format!("scenario {scenario}: {kind} enabled but failed: {:?}", result.err())
                })?;
            } else {
                disabled += 1;
                let ok = matches!(&result, Err(AggregationError::Disabled { op, .. }) if *op == kind);
                ensure(ok, || format!("scenario {scenario}: {kind} disabled but gave {result:?}"))?;
            }
        }
    }
    Ok(format!(
        "{combos} combinations ({disabled} disabled), archetype arithmetic blocked in {archetype_blocks}"
    ))
}

fn persistence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..100 {
        let doc = random_document(&mut rng, &format!("doc-{i}"));
        let first = save_document(&doc);
        let loaded = load_document(&first).map_err(|e| format!("doc {i}: {e}"))?;
        ensure(loaded == doc, || format!("doc {i}: load(save(doc)) differs"))?;
        ensure(save_document(&loaded) == first, || format!("doc {i}: bytes changed"))?;
    }
    // integrity violations
    let mut doc = random_document(&mut rng, "victim");
    if doc.hierarchy.piles_post_order().is_empty() {
        let roots = doc.hierarchy.roots()[..2].to_vec();
        doc = doc
            .apply(&Mutation::Merge(Merge::new(MergeOp::Juxtapose, roots)))
            .map_err(|e| e.to_string())?
            .0;
    }
    let mut json: serde_json::Value = serde_json::from_slice(&save_document(&doc)).unwrap();
    let mut dangling = json.clone();
    let piles = dangling["piles"].as_array_mut().unwrap();
    piles[0]["children"][0] = "ghost".into();
    let dangling = serde_json::to_vec(&dangling).unwrap();
    ensure(
        matches!(load_document(&dangling), Err(DocumentError::IntegrityViolation(_))),
        || "dangling child accepted".into(),
    )?;
    let leaf0 = doc.hierarchy.leaf_order()[0].clone();
    json["views"] = serde_json::json!([{"label": "broken", "members": [leaf0, leaf0]}]);
    ensure(
        matches!(
            load_document(&serde_json::to_vec(&json).unwrap()),
            Err(DocumentError::IntegrityViolation(_))
        ),
        || "invalid view accepted".into(),
    )?;
    json["schemaVersion"] = 2.into();
    ensure(
        matches!(
            load_document(&serde_json::to_vec(&json).unwrap()),
            Err(DocumentError::SchemaVersionMismatch { found: 2 })
        ),
        || "future schema accepted".into(),
    )?;
    Ok("100 documents byte-stable; dangling child, invalid view and future schema rejected".into())
}

fn layout() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut laid_out = 0;
    for case in 0..200 {
        let leaves = rng.gen_range(1..120);
        let h = random_hierarchy(&mut rng, leaves);
        let v = random_view(&mut rng, &h);
        let vp = Viewport::new(rng.gen_range(320.0..2560.0), rng.gen_range(240.0..1600.0));
        let cfg = if rng.gen_bool(0.3) {
            LayoutConfig {
                mode: LayoutMode::Fixed {
                    card_width: rng.gen_range(100.0..400.0),
                    card_height: rng.gen_range(80.0..300.0),
                },
                ..LayoutConfig::default()
            }
        } else {
            LayoutConfig::default()
        };
        let fitted = auto_rollup(&h, &v, vp, &cfg, v.members.choose(&mut rng));
        ensure(validate_view(&h, &fitted).is_empty(), || format!("case {case}: rollup broke the cut"))?;
        ensure(fitted.len() <= v.len(), || format!("case {case}: rollup grew the view"))?;
        let frames = match layout_view(&h, &fitted, vp, &cfg) {
            Ok(f) => f,
            // only possible when even the top view cannot meet the minima
            Err(_) if fitted == top_view(&h) => continue,
            Err(e) => return Err(format!("case {case}: {e}")),
        };
        laid_out += 1;
        ensure(frames.len() == fitted.len(), || format!("case {case}: frame count"))?;
        for (i, f) in frames.iter().enumerate() {
            ensure(f.node_id == fitted.members[i], || format!("case {case}: frame order"))?;
            ensure(f.rect.height == frames[0].rect.height, || format!("case {case}: heights differ"))?;
            for g in &frames[i + 1..] {
                ensure(!f.rect.overlaps(&g.rect), || format!("case {case}: overlap"))?;
                let row_major = g.rect.y > f.rect.y || (g.rect.y == f.rect.y && g.rect.x > f.rect.x);
                ensure(row_major, || format!("case {case}: not row-major"))?;
            }
        }
    }
    Ok(format!("200 cases ({laid_out} laid out): no overlap, equal heights, row-major, rollup sound"))
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 7] = [
        ("four-step-replay", four_step_replay),
        ("expert-novice-counts", expert_novice_counts),
        ("view-invariant-fuzz", view_fuzz),
        ("arithmetic-oracle", arithmetic_oracle),
        ("compatibility-soundness", soundness),
        ("persistence", persistence),
        ("layout", layout),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
