//! Random drill / roll / jump walks that check the view invariants after
//! every step.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hierarchy::{drill_down, roll_up, top_view, validate_view, Hierarchy, View};
use crate::model::NodeId;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("step {step} ({action}): {problem}")]
pub struct FuzzFailure {
    pub step: usize,
    pub action: String,
    pub problem: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FuzzReport {
    /// View size after each step, starting with the initial view.
    pub trajectory: Vec<usize>,
    pub drills: usize,
    pub rolls: usize,
    pub jumps: usize,
}

/// Concatenated leaf frontiers of the members must equal the leaf order.
pub fn preserves_order(h: &Hierarchy, v: &View) -> bool {
    let mut leaves = h.leaf_order().iter();
    v.members
        .iter()
        .flat_map(|m| h.leaves_under(m))
        .all(|l| leaves.next() == Some(l))
        && leaves.next().is_none()
}

fn check(h: &Hierarchy, v: &View, step: usize, action: &str) -> Result<(), FuzzFailure> {
    let fail = |problem: String| FuzzFailure {
        step,
        action: action.to_string(),
        problem,
    };
    let violations = validate_view(h, v);
    if let Some(first) = violations.first() {
        return Err(fail(format!("cut property violated: {first}")));
    }
    if !preserves_order(h, v) {
        return Err(fail("leaf order not preserved".into()));
    }
    let (top, bottom) = (h.roots().len(), h.leaf_order().len());
    if v.len() < top || v.len() > bottom {
        return Err(fail(format!("size {} outside [{top}, {bottom}]", v.len())));
    }
    Ok(())
}

/// Walks `ops` random actions from the top view. `jump_targets` are the views
/// a jump may land on (the top and bottom views are always candidates).
pub fn fuzz_views(
    h: &Hierarchy,
    jump_targets: &[View],
    ops: usize,
    seed: u64,
) -> Result<FuzzReport, FuzzFailure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut targets = vec![top_view(h), crate::hierarchy::bottom_view(h)];
    targets.extend(jump_targets.iter().cloned());

    let mut view = top_view(h);
    check(h, &view, 0, "start")?;
    let mut report = FuzzReport {
        trajectory: vec![view.len()],
        ..FuzzReport::default()
    };
    // (view before the drill, drilled pile) for the inversion check
    let mut last_drill: Option<(View, NodeId)> = None;

    for step in 1..=ops {
        let piles: Vec<&NodeId> = view
            .members
            .iter()
            .filter(|m| h.get(m.as_str()).is_some_and(|n| n.is_pile()))
            .collect();
        let nested: Vec<&NodeId> = view.members.iter().filter(|m| h.parent(m).is_some()).collect();
        let choice = rng.gen_range(0..10);
        let (next, label) = if choice < 5 && !piles.is_empty() {
            let p = (*piles.choose(&mut rng).unwrap()).clone();
            let next = drill_down(h, &view, &p).map_err(|e| FuzzFailure {
                step,
                action: format!("drill {p}"),
                problem: e.to_string(),
            })?;
            let expected = view.len() + h.node(&p).map(|n| n.children().len()).unwrap_or(0) - 1;
            if next.len() != expected {
                return Err(FuzzFailure {
                    step,
                    action: format!("drill {p}"),
                    problem: format!("size {} != {expected}", next.len()),
                });
            }
            report.drills += 1;
            last_drill = Some((view.clone(), p.clone()));
            (next, format!("drill {p}"))
        } else if choice < 9 && !nested.is_empty() {
            let c = (*nested.choose(&mut rng).unwrap()).clone();
            let next = roll_up(h, &view, &c).map_err(|e| FuzzFailure {
                step,
                action: format!("roll {c}"),
                problem: e.to_string(),
            })?;
            if next.len() >= view.len() {
                return Err(FuzzFailure {
                    step,
                    action: format!("roll {c}"),
                    problem: "roll-up did not shrink the view".into(),
                });
            }
            if let Some((before, pile)) = &last_drill {
                if h.parent(&c) == Some(pile) && next != *before {
                    return Err(FuzzFailure {
                        step,
                        action: format!("roll {c}"),
                        problem: "roll-up after drill did not restore the view".into(),
                    });
                }
            }
            report.rolls += 1;
            last_drill = None;
            (next, format!("roll {c}"))
        } else {
            let idx = rng.gen_range(0..targets.len());
            report.jumps += 1;
            last_drill = None;
            (targets[idx].clone(), format!("jump {idx}"))
        };
        check(h, &next, step, &label)?;
        view = next;
        report.trajectory.push(view.len());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::tests::{atom, pile};

    #[test]
    fn deterministic_under_seed() {
        let h = Hierarchy::new(
            vec![
                atom("a"),
                atom("b"),
                atom("c"),
                atom("d"),
                pile("P", &["a", "b"]),
                pile("Q", &["P", "c", "d"]),
            ],
            vec!["Q".into()],
        )
        .unwrap();
        let a = fuzz_views(&h, &[], 500, 7).unwrap();
        let b = fuzz_views(&h, &[], 500, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trajectory.len(), 501);
        assert!(a.drills > 0 && a.rolls > 0 && a.jumps > 0);
    }

    #[test]
    fn order_check_detects_swaps() {
        let h = Hierarchy::new(vec![atom("a"), atom("b")], vec!["a".into(), "b".into()]).unwrap();
        assert!(preserves_order(&h, &View::new(["a", "b"])));
        assert!(!preserves_order(&h, &View::new(["b", "a"])));
        assert!(!preserves_order(&h, &View::new(["a"])));
    }
}
