//! The aggregation hierarchy and the views (cuts) readers navigate through it.
//!
//! A [`Hierarchy`] is a forest of piles over chart atoms. Every node covers a
//! contiguous range of the canonical leaf order, which makes the cut property
//! of a [`View`] a question of whether member ranges tile `0..leaves` in order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ChartAtom, Node, NodeId, Pile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HierarchyError {
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("node `{0}` is not in the view")]
    NotInView(NodeId),
    #[error("node `{0}` is a chart atom, not a pile")]
    NotAPile(NodeId),
    #[error("node `{0}` is a root; there is nothing to roll up to")]
    IsRoot(NodeId),
    #[error("view label `{0}` is already defined")]
    DuplicateLabel(String),
    #[error("unknown view `{0}`")]
    UnknownView(String),
    #[error("invalid view: {}", join_violations(.0))]
    InvalidView(Vec<Violation>),
    #[error("malformed hierarchy: {0}")]
    Malformed(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// One reason a member list fails to be a cut of the hierarchy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnknownId(NodeId),
    DuplicateMember(NodeId),
    LeafUncovered(NodeId),
    LeafCoveredMultiple { leaf: NodeId, times: usize },
    OutOfOrder(NodeId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownId(id) => write!(f, "unknown id {id}"),
            Violation::DuplicateMember(id) => write!(f, "member {id} listed twice"),
            Violation::LeafUncovered(id) => write!(f, "leaf {id} not covered"),
            Violation::LeafCoveredMultiple { leaf, times: 2 } => {
                write!(f, "leaf {leaf} covered twice")
            }
            Violation::LeafCoveredMultiple { leaf, times } => {
                write!(f, "leaf {leaf} covered {times} times")
            }
            Violation::OutOfOrder(id) => write!(f, "member {id} out of leaf order"),
        }
    }
}

/// An ordered cut through the hierarchy: the cards currently visible.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct View {
    pub members: Vec<NodeId>,
}

impl View {
    pub fn new<I, S>(members: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<NodeId>,
    {
        View {
            members: members.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.members.contains(id)
    }

    pub fn position(&self, id: &NodeId) -> Option<usize> {
        self.members.iter().position(|m| m == id)
    }

    /// Re-sorts members by the leaf order of `h`. Needed after authoring
    /// operations that reorder roots.
    pub fn normalized(&self, h: &Hierarchy) -> View {
        let mut members = self.members.clone();
        members.sort_by_key(|m| h.span(m).map(|s| s.0).unwrap_or(usize::MAX));
        View { members }
    }
}

/// An author-saved view with a label such as "novice" or "expert".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredefinedView {
    pub label: String,
    #[serde(flatten)]
    pub view: View,
}

/// Labels that always resolve, whether or not the author saved them.
pub const TOP_LABEL: &str = "top";
pub const BOTTOM_LABEL: &str = "bottom";

#[derive(Debug, Clone)]
pub struct Hierarchy {
    nodes: BTreeMap<NodeId, Node>,
    roots: Vec<NodeId>,
    leaf_order: Vec<NodeId>,
    parent: HashMap<NodeId, NodeId>,
    /// Half-open range of leaf-order indices covered by each node.
    span: HashMap<NodeId, (usize, usize)>,
    depth: HashMap<NodeId, usize>,
}

impl PartialEq for Hierarchy {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.roots == other.roots
    }
}

impl Hierarchy {
    /// Builds and validates a hierarchy from its nodes and ordered roots.
    pub fn new<I>(nodes: I, roots: Vec<NodeId>) -> Result<Self, HierarchyError>
    where
        I: IntoIterator<Item = Node>,
    {
        let mut map = BTreeMap::new();
        for node in nodes {
            let id = node.id().clone();
            if map.insert(id.clone(), node).is_some() {
                return Err(HierarchyError::Malformed(format!("duplicate node id `{id}`")));
            }
        }

        let mut parent = HashMap::new();
        for node in map.values() {
            if let Node::Pile(p) = node {
                if p.children.len() < 2 {
                    return Err(HierarchyError::Malformed(format!(
                        "pile `{}` has fewer than two children",
                        p.id
                    )));
                }
                for c in &p.children {
                    if !map.contains_key(c) {
                        return Err(HierarchyError::Malformed(format!(
                            "pile `{}` references missing child `{c}`",
                            p.id
                        )));
                    }
                    if let Some(prev) = parent.insert(c.clone(), p.id.clone()) {
                        return Err(HierarchyError::Malformed(format!(
                            "node `{c}` has two parents (`{prev}` and `{}`)",
                            p.id
                        )));
                    }
                }
            }
        }

        let mut seen_roots = HashSet::new();
        for r in &roots {
            if !map.contains_key(r) {
                return Err(HierarchyError::Malformed(format!("unknown root `{r}`")));
            }
            if parent.contains_key(r) {
                return Err(HierarchyError::Malformed(format!("root `{r}` has a parent")));
            }
            if !seen_roots.insert(r.clone()) {
                return Err(HierarchyError::Malformed(format!("root `{r}` listed twice")));
            }
        }

        let mut h = Hierarchy {
            nodes: map,
            roots,
            leaf_order: Vec::new(),
            parent,
            span: HashMap::new(),
            depth: HashMap::new(),
        };
        h.index()?;
        Ok(h)
    }

    fn index(&mut self) -> Result<(), HierarchyError> {
        // iterative DFS so deep chains cannot overflow the stack
        enum Step {
            Enter(NodeId, usize),
            Exit(NodeId),
        }
        let mut stack: Vec<Step> = self
            .roots
            .iter()
            .rev()
            .map(|r| Step::Enter(r.clone(), 0))
            .collect();
        let mut visited = HashSet::new();
        let mut starts: HashMap<NodeId, usize> = HashMap::new();
        while let Some(step) = stack.pop() {
            match step {
                Step::Enter(id, depth) => {
                    if !visited.insert(id.clone()) {
                        return Err(HierarchyError::Malformed(format!("cycle through `{id}`")));
                    }
                    self.depth.insert(id.clone(), depth);
                    starts.insert(id.clone(), self.leaf_order.len());
                    match &self.nodes[&id] {
                        Node::Atom(_) => {
                            self.leaf_order.push(id.clone());
                            self.span
                                .insert(id.clone(), (self.leaf_order.len() - 1, self.leaf_order.len()));
                        }
                        Node::Pile(p) => {
                            stack.push(Step::Exit(id.clone()));
                            for c in p.children.iter().rev() {
                                stack.push(Step::Enter(c.clone(), depth + 1));
                            }
                        }
                    }
                }
                Step::Exit(id) => {
                    let start = starts[&id];
                    self.span.insert(id, (start, self.leaf_order.len()));
                }
            }
        }
        if visited.len() != self.nodes.len() {
            let orphan = self.nodes.keys().find(|k| !visited.contains(*k)).unwrap();
            return Err(HierarchyError::Malformed(format!(
                "node `{orphan}` is unreachable from the roots"
            )));
        }
        Ok(())
    }

    pub fn node(&self, id: &NodeId) -> Result<&Node, HierarchyError> {
        self.nodes
            .get(id)
            .ok_or_else(|| HierarchyError::UnknownNode(id.clone()))
    }

    pub fn get(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn leaf_order(&self) -> &[NodeId] {
        &self.leaf_order
    }

    pub fn parent(&self, id: &NodeId) -> Option<&NodeId> {
        self.parent.get(id)
    }

    pub fn span(&self, id: &NodeId) -> Option<(usize, usize)> {
        self.span.get(id).copied()
    }

    /// Number of ancestors above `id`.
    pub fn depth(&self, id: &NodeId) -> Option<usize> {
        self.depth.get(id).copied()
    }

    /// Leaves under `id`, in canonical order.
    pub fn leaves_under(&self, id: &NodeId) -> &[NodeId] {
        match self.span(id) {
            Some((s, e)) => &self.leaf_order[s..e],
            None => &[],
        }
    }

    /// True when `ancestor` is a proper ancestor of `node`.
    pub fn is_ancestor(&self, ancestor: &NodeId, node: &NodeId) -> bool {
        let mut cur = self.parent.get(node);
        while let Some(p) = cur {
            if p == ancestor {
                return true;
            }
            cur = self.parent.get(p);
        }
        false
    }

    /// Atoms in leaf order.
    pub fn atoms(&self) -> impl Iterator<Item = &ChartAtom> {
        self.leaf_order
            .iter()
            .filter_map(|id| self.nodes.get(id).and_then(Node::as_atom))
    }

    /// Piles in post-order (children before parents), roots left to right.
    pub fn piles_post_order(&self) -> Vec<&Pile> {
        let mut out = Vec::new();
        for r in &self.roots {
            self.post_order_into(r, &mut out);
        }
        out
    }

    fn post_order_into<'a>(&'a self, id: &NodeId, out: &mut Vec<&'a Pile>) {
        if let Some(Node::Pile(p)) = self.nodes.get(id) {
            for c in &p.children {
                self.post_order_into(c, out);
            }
            out.push(p);
        }
    }

    /// All nodes in pre-order, for tree rendering.
    pub fn pre_order(&self) -> Vec<&NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack: Vec<&NodeId> = self.roots.iter().rev().collect();
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children().iter().rev());
        }
        out
    }

    /// First free id of the form `<prefix>-<n>`, counting from 1.
    pub fn fresh_id(&self, prefix: &str) -> NodeId {
        let taken = self
            .nodes
            .keys()
            .filter(|k| k.as_str().starts_with(prefix))
            .count();
        (taken + 1..)
            .map(|n| NodeId::new(format!("{prefix}-{n}")))
            .find(|id| !self.nodes.contains_key(id))
            .unwrap()
    }

    pub fn into_parts(self) -> (Vec<Node>, Vec<NodeId>) {
        (self.nodes.into_values().collect(), self.roots)
    }

    /// Attaches `pile` over root nodes listed as its children. The pile takes
    /// the root position of its leftmost child and its children are
    /// reordered to follow root order.
    pub fn with_pile(&self, mut pile: Pile) -> Result<Hierarchy, HierarchyError> {
        if self.nodes.contains_key(&pile.id) {
            return Err(HierarchyError::Malformed(format!(
                "node id `{}` already exists",
                pile.id
            )));
        }
        let mut positions = Vec::with_capacity(pile.children.len());
        for c in &pile.children {
            self.node(c)?;
            let pos = self.roots.iter().position(|r| r == c).ok_or_else(|| {
                HierarchyError::Malformed(format!("node `{c}` already has a parent"))
            })?;
            positions.push(pos);
        }
        positions.sort_unstable();
        positions.dedup();
        if positions.len() != pile.children.len() {
            return Err(HierarchyError::Malformed("pile lists a child twice".into()));
        }
        pile.children = positions.iter().map(|&i| self.roots[i].clone()).collect();
        let mut roots = Vec::with_capacity(self.roots.len() + 1 - positions.len());
        for (i, r) in self.roots.iter().enumerate() {
            if i == positions[0] {
                roots.push(pile.id.clone());
            }
            if positions.binary_search(&i).is_err() {
                roots.push(r.clone());
            }
        }
        let mut nodes: Vec<Node> = self.nodes.values().cloned().collect();
        nodes.push(Node::Pile(pile));
        Hierarchy::new(nodes, roots)
    }

    /// Removes pile `id`, putting its children where it stood.
    pub fn without_pile(&self, id: &NodeId) -> Result<Hierarchy, HierarchyError> {
        let pile = match self.node(id)? {
            Node::Pile(p) => p.clone(),
            Node::Atom(_) => return Err(HierarchyError::NotAPile(id.clone())),
        };
        let splice = |list: &[NodeId]| -> Vec<NodeId> {
            let mut out = Vec::with_capacity(list.len() + pile.children.len());
            for n in list {
                if n == id {
                    out.extend(pile.children.iter().cloned());
                } else {
                    out.push(n.clone());
                }
            }
            out
        };
        let roots = splice(&self.roots);
        let parent = self.parent.get(id).cloned();
        let nodes = self
            .nodes
            .values()
            .filter(|n| n.id() != id)
            .map(|n| match (n, &parent) {
                (Node::Pile(p), Some(par)) if &p.id == par => {
                    let mut p = p.clone();
                    p.children = splice(&p.children);
                    Node::Pile(p)
                }
                _ => n.clone(),
            })
            .collect::<Vec<_>>();
        Hierarchy::new(nodes, roots)
    }

    /// Appends atoms as new roots at the end of the leaf order.
    pub fn with_atoms(&self, atoms: Vec<ChartAtom>) -> Result<Hierarchy, HierarchyError> {
        let mut roots = self.roots.clone();
        let mut nodes: Vec<Node> = self.nodes.values().cloned().collect();
        for a in atoms {
            roots.push(a.id.clone());
            nodes.push(Node::Atom(a));
        }
        Hierarchy::new(nodes, roots)
    }

    /// Returns a copy with one node edited in place. Structure is unchanged.
    pub fn with_node_edit<F>(&self, id: &NodeId, edit: F) -> Result<Hierarchy, HierarchyError>
    where
        F: FnOnce(&mut Node),
    {
        let mut h = self.clone();
        let node = h
            .nodes
            .get_mut(id)
            .ok_or_else(|| HierarchyError::UnknownNode(id.clone()))?;
        edit(node);
        Ok(h)
    }
}

pub fn bottom_view(h: &Hierarchy) -> View {
    View {
        members: h.leaf_order().to_vec(),
    }
}

pub fn top_view(h: &Hierarchy) -> View {
    View {
        members: h.roots().to_vec(),
    }
}

/// Replaces `pile` in the view with its children.
pub fn drill_down(h: &Hierarchy, v: &View, pile: &NodeId) -> Result<View, HierarchyError> {
    let node = h.node(pile)?;
    let pos = v
        .position(pile)
        .ok_or_else(|| HierarchyError::NotInView(pile.clone()))?;
    let children = match node {
        Node::Pile(p) => &p.children,
        Node::Atom(_) => return Err(HierarchyError::NotAPile(pile.clone())),
    };
    let mut members = Vec::with_capacity(v.len() + children.len() - 1);
    members.extend_from_slice(&v.members[..pos]);
    members.extend(children.iter().cloned());
    members.extend_from_slice(&v.members[pos + 1..]);
    Ok(View { members })
}

/// Collapses the whole frontier under `node`'s parent back into the parent.
pub fn roll_up(h: &Hierarchy, v: &View, node: &NodeId) -> Result<View, HierarchyError> {
    h.node(node)?;
    if !v.contains(node) {
        return Err(HierarchyError::NotInView(node.clone()));
    }
    let parent = h
        .parent(node)
        .ok_or_else(|| HierarchyError::IsRoot(node.clone()))?;
    let (start, end) = h.span(parent).expect("indexed");
    let mut members = Vec::with_capacity(v.len());
    let mut inserted = false;
    for m in &v.members {
        let inside = h.span(m).is_some_and(|(s, e)| s >= start && e <= end);
        if inside {
            if !inserted {
                members.push(parent.clone());
                inserted = true;
            }
        } else {
            members.push(m.clone());
        }
    }
    Ok(View { members })
}

/// Lists every way `v` fails to be an ordered cut of `h`; empty means valid.
pub fn validate_view(h: &Hierarchy, v: &View) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut coverage = vec![0usize; h.leaf_order().len()];
    let mut seen = HashSet::new();
    let mut last_start: Option<usize> = None;
    for m in &v.members {
        if !seen.insert(m) {
            violations.push(Violation::DuplicateMember(m.clone()));
            continue;
        }
        let Some((s, e)) = h.span(m) else {
            violations.push(Violation::UnknownId(m.clone()));
            continue;
        };
        for c in &mut coverage[s..e] {
            *c += 1;
        }
        if last_start.is_some_and(|prev| s < prev) {
            violations.push(Violation::OutOfOrder(m.clone()));
        }
        last_start = Some(s);
    }
    for (leaf, count) in h.leaf_order().iter().zip(coverage) {
        match count {
            1 => {}
            0 => violations.push(Violation::LeafUncovered(leaf.clone())),
            n => violations.push(Violation::LeafCoveredMultiple {
                leaf: leaf.clone(),
                times: n,
            }),
        }
    }
    violations
}

pub fn check_view(h: &Hierarchy, v: &View) -> Result<(), HierarchyError> {
    let violations = validate_view(h, v);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(HierarchyError::InvalidView(violations))
    }
}

/// Frontier that depth labels are counted from.
#[derive(Debug, Clone, Copy)]
pub enum DepthReference<'a> {
    Root,
    View(&'a View),
}

/// Drill steps needed from the reference frontier to reveal `node`. Nodes at
/// or above the frontier report 0.
pub fn depth_of(
    h: &Hierarchy,
    node: &NodeId,
    reference: DepthReference<'_>,
) -> Result<usize, HierarchyError> {
    let depth = h
        .depth(node)
        .ok_or_else(|| HierarchyError::UnknownNode(node.clone()))?;
    match reference {
        DepthReference::Root => Ok(depth),
        DepthReference::View(v) => {
            let anchor = v
                .members
                .iter()
                .find(|m| *m == node || h.is_ancestor(m, node));
            Ok(match anchor.and_then(|m| h.depth(m)) {
                Some(d) => depth - d,
                None => 0,
            })
        }
    }
}
