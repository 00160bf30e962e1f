//! POWL 2.0 models: partial orders and choice graphs over sub-models, with
//! transitions at the leaves.

mod language;
mod to_net;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::net::{Label, NodeId};

pub use language::{
    language_bounded, language_bounded_capped, min_visible_len, paths_bounded, shuffle,
    TooManyTraces,
};
pub use to_net::powl_to_net;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructError {
    #[error("a composite needs at least two children, got {0}")]
    TooFewChildren(usize),
    #[error("index {index} out of range for {n} children")]
    OutOfRange { index: usize, n: usize },
    #[error("order is cyclic through child {0}")]
    CyclicOrder(usize),
    #[error("edge into the start node")]
    EdgeIntoStart,
    #[error("edge out of the end node")]
    EdgeOutOfEnd,
    #[error("direct edge from start to end")]
    StartToEnd,
    #[error("child {0} is not reachable from the start node")]
    Unreachable(usize),
    #[error("the end node is not reachable from child {0}")]
    CannotFinish(usize),
}

/// A strict partial order over child indices `0..n`, stored transitively closed.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OrderStruct {
    n: usize,
    rel: BTreeSet<(usize, usize)>,
}

impl OrderStruct {
    /// Closes `pairs` transitively; fails if the closure is not irreflexive.
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, StructError> {
        if n < 2 {
            return Err(StructError::TooFewChildren(n));
        }
        let mut succ = vec![BTreeSet::new(); n];
        for (a, b) in pairs {
            for index in [a, b] {
                if index >= n {
                    return Err(StructError::OutOfRange { index, n });
                }
            }
            succ[a].insert(b);
        }
        let mut rel = BTreeSet::new();
        for a in 0..n {
            let mut seen = vec![false; n];
            let mut stack: Vec<usize> = succ[a].iter().copied().collect();
            while let Some(b) = stack.pop() {
                if seen[b] {
                    continue;
                }
                seen[b] = true;
                if b == a {
                    return Err(StructError::CyclicOrder(a));
                }
                rel.insert((a, b));
                stack.extend(succ[b].iter().copied());
            }
        }
        Ok(OrderStruct { n, rel })
    }

    /// The empty order: all children concurrent.
    pub fn unordered(n: usize) -> Result<Self, StructError> {
        Self::new(n, [])
    }

    /// `0 < 1 < ... < n-1`.
    pub fn total(n: usize) -> Result<Self, StructError> {
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn child_count(&self) -> usize {
        self.n
    }

    pub fn relation(&self) -> &BTreeSet<(usize, usize)> {
        &self.rel
    }

    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.rel.contains(&(a, b))
    }

    pub fn predecessors(&self, b: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&a| self.rel.contains(&(a, b)))
    }

    /// Pairs `a < b` with nothing strictly between them.
    pub fn covering_pairs(&self) -> Vec<(usize, usize)> {
        self.rel
            .iter()
            .copied()
            .filter(|&(a, b)| !(0..self.n).any(|c| self.precedes(a, c) && self.precedes(c, b)))
            .collect()
    }

    pub fn minimal(&self) -> Vec<usize> {
        (0..self.n).filter(|&b| self.predecessors(b).next().is_none()).collect()
    }

    pub fn maximal(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&a| !(0..self.n).any(|b| self.precedes(a, b)))
            .collect()
    }
}

impl fmt::Debug for OrderStruct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Order({}, {:?})", self.n, self.rel)
    }
}

/// Node of a choice graph: the artificial start and end, or a child index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CgNode {
    Start,
    Child(usize),
    End,
}

/// A choice graph over child indices `0..n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ChoiceGraphStruct {
    n: usize,
    edges: BTreeSet<(CgNode, CgNode)>,
}

impl ChoiceGraphStruct {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (CgNode, CgNode)>) -> Result<Self, StructError> {
        if n < 2 {
            return Err(StructError::TooFewChildren(n));
        }
        let edges: BTreeSet<(CgNode, CgNode)> = edges.into_iter().collect();
        for &(a, b) in &edges {
            for x in [a, b] {
                if let CgNode::Child(index) = x {
                    if index >= n {
                        return Err(StructError::OutOfRange { index, n });
                    }
                }
            }
            match (a, b) {
                (CgNode::Start, CgNode::End) => return Err(StructError::StartToEnd),
                (_, CgNode::Start) => return Err(StructError::EdgeIntoStart),
                (CgNode::End, _) => return Err(StructError::EdgeOutOfEnd),
                _ => {}
            }
        }
        let g = ChoiceGraphStruct { n, edges };
        let fwd = g.sweep(CgNode::Start, true);
        if let Some(i) = (0..n).find(|&i| !fwd[i + 1]) {
            return Err(StructError::Unreachable(i));
        }
        let bwd = g.sweep(CgNode::End, false);
        if let Some(i) = (0..n).find(|&i| !bwd[i + 1]) {
            return Err(StructError::CannotFinish(i));
        }
        Ok(g)
    }

    fn slot(&self, x: CgNode) -> usize {
        match x {
            CgNode::Start => 0,
            CgNode::Child(i) => i + 1,
            CgNode::End => self.n + 1,
        }
    }

    fn sweep(&self, from: CgNode, forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.n + 2];
        let mut queue = VecDeque::from([from]);
        seen[self.slot(from)] = true;
        while let Some(x) = queue.pop_front() {
            for &(a, b) in &self.edges {
                let next = match forward {
                    true if a == x => b,
                    false if b == x => a,
                    _ => continue,
                };
                let s = self.slot(next);
                if !seen[s] {
                    seen[s] = true;
                    queue.push_back(next);
                }
            }
        }
        seen
    }

    pub fn child_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &BTreeSet<(CgNode, CgNode)> {
        &self.edges
    }

    pub fn successors(&self, x: CgNode) -> impl Iterator<Item = CgNode> + '_ {
        self.edges
            .range((x, CgNode::Start)..)
            .take_while(move |(a, _)| *a == x)
            .map(|&(_, b)| b)
    }

    pub fn predecessors(&self, x: CgNode) -> impl Iterator<Item = CgNode> + '_ {
        self.edges.iter().filter(move |(_, b)| *b == x).map(|&(a, _)| a)
    }

    pub fn has_edge(&self, a: CgNode, b: CgNode) -> bool {
        self.edges.contains(&(a, b))
    }

    /// Whether some child lies on a cycle.
    pub fn is_cyclic(&self) -> bool {
        (0..self.n).any(|i| {
            let from = CgNode::Child(i);
            self.successors(from)
                .any(|s| s == from || self.sweep(s, true)[self.slot(from)])
        })
    }
}

impl fmt::Debug for ChoiceGraphStruct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph({}, {:?})", self.n, self.edges)
    }
}

/// A POWL 2.0 model.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PowlNode {
    Leaf { id: NodeId, label: Label },
    PartialOrder { order: OrderStruct, children: Vec<PowlNode> },
    ChoiceGraph { graph: ChoiceGraphStruct, children: Vec<PowlNode> },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PowlError {
    #[error("at {path:?}: {error}")]
    Structure { path: Vec<usize>, error: StructError },
    #[error("at {path:?}: structure expects {expected} children, found {found}")]
    ChildCount { path: Vec<usize>, expected: usize, found: usize },
    #[error("at {path:?}: transition `{id}` occurs more than once")]
    DuplicateTransition { path: Vec<usize>, id: NodeId },
}

impl PowlNode {
    pub fn leaf(id: impl Into<NodeId>, label: Label) -> Self {
        PowlNode::Leaf { id: id.into(), label }
    }

    pub fn partial_order(order: OrderStruct, children: Vec<PowlNode>) -> Self {
        PowlNode::PartialOrder { order, children }
    }

    pub fn choice_graph(graph: ChoiceGraphStruct, children: Vec<PowlNode>) -> Self {
        PowlNode::ChoiceGraph { graph, children }
    }

    pub fn children(&self) -> &[PowlNode] {
        match self {
            PowlNode::Leaf { .. } => &[],
            PowlNode::PartialOrder { children, .. } | PowlNode::ChoiceGraph { children, .. } => children,
        }
    }

    /// Checks arities and leaf uniqueness. Node paths in diagnostics are child
    /// index sequences from the root.
    pub fn validate(&self) -> Result<(), PowlError> {
        let mut seen = BTreeSet::new();
        self.validate_at(&mut Vec::new(), &mut seen)
    }

    fn validate_at(&self, path: &mut Vec<usize>, seen: &mut BTreeSet<NodeId>) -> Result<(), PowlError> {
        let (expected, children) = match self {
            PowlNode::Leaf { id, .. } => {
                if !seen.insert(id.clone()) {
                    return Err(PowlError::DuplicateTransition { path: path.clone(), id: id.clone() });
                }
                return Ok(());
            }
            PowlNode::PartialOrder { order, children } => {
                // Re-check in case the relation was assembled elsewhere.
                OrderStruct::new(order.n, order.rel.iter().copied())
                    .map_err(|error| PowlError::Structure { path: path.clone(), error })?;
                (order.n, children)
            }
            PowlNode::ChoiceGraph { graph, children } => {
                ChoiceGraphStruct::new(graph.n, graph.edges.iter().copied())
                    .map_err(|error| PowlError::Structure { path: path.clone(), error })?;
                (graph.n, children)
            }
        };
        if expected != children.len() {
            return Err(PowlError::ChildCount { path: path.clone(), expected, found: children.len() });
        }
        for (i, c) in children.iter().enumerate() {
            path.push(i);
            c.validate_at(path, seen)?;
            path.pop();
        }
        Ok(())
    }

    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<(&NodeId, &Label)> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            match n {
                PowlNode::Leaf { id, label } => out.push((id, label)),
                _ => stack.extend(n.children().iter().rev()),
            }
        }
        out
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            PowlNode::Leaf { .. } => 1,
            _ => self.children().iter().map(PowlNode::leaf_count).sum(),
        }
    }

    pub fn partial_order_count(&self) -> usize {
        let own = usize::from(matches!(self, PowlNode::PartialOrder { .. }));
        own + self.children().iter().map(PowlNode::partial_order_count).sum::<usize>()
    }

    pub fn choice_graph_count(&self) -> usize {
        let own = usize::from(matches!(self, PowlNode::ChoiceGraph { .. }));
        own + self.children().iter().map(PowlNode::choice_graph_count).sum::<usize>()
    }

    /// Leaves count as depth 0.
    pub fn depth(&self) -> usize {
        self.children().iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }
}
