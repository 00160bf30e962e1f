//! Partitioning of workflow nets into partial-order and choice-graph parts,
//! the validity predicates for those partitions, projection of a part onto a
//! stand-alone workflow net, and the order / flow that connects the parts.

mod flow;
mod order;

use std::collections::BTreeSet;
use std::fmt;

use fixedbitset::FixedBitSet;
use petgraph::unionfind::UnionFind;
use thiserror::Error;

use crate::net::{IdSource, Label, NetError, NodeId, PetriNet, WfError, WorkflowNet};
use crate::partition::TransitionPartition;
use crate::powl::StructError;

pub use flow::{cg_closure, cg_partition, cg_project, execution_flow, is_concurrency_hiding};
pub use order::{execution_order, po_closure, is_conflict_hiding, po_partition, po_project};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecomposeError {
    /// The raw execution order has a cycle through the given part.
    #[error("execution order is cyclic through part {0}")]
    CyclicOrder(usize),
    #[error("execution order is not a partial order: {0}")]
    InvalidOrder(StructError),
    #[error("execution flow is not a choice graph: {0}")]
    InvalidFlowGraph(StructError),
    #[error("part needs one entry and one exit, has {{{}}} and {{{}}}", join_ids(.entries), join_ids(.exits))]
    AmbiguousInterface { entries: BTreeSet<NodeId>, exits: BTreeSet<NodeId> },
    #[error("partition does not cover the transitions of the net")]
    NotAPartition,
    #[error("projection is not a workflow net: {0}")]
    NotWorkflow(#[from] WfError),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// A broken condition of a conflict-hiding or concurrency-hiding partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A place is an entry point of several parts.
    SharedEntry { place: NodeId, parts: Vec<usize> },
    /// A place is an exit point of several parts.
    SharedExit { place: NodeId, parts: Vec<usize> },
    /// Two entry points of a part lead to different transitions in it.
    EntriesNotEquivalent { part: usize, places: (NodeId, NodeId) },
    /// Two exit points of a part are fed by different transitions in it.
    ExitsNotEquivalent { part: usize, places: (NodeId, NodeId) },
    /// A part of a choice-graph partition has other than one entry point.
    EntryCount { part: usize, places: BTreeSet<NodeId> },
    /// A part of a choice-graph partition has other than one exit point.
    ExitCount { part: usize, places: BTreeSet<NodeId> },
}

impl Violation {
    /// Short name of the violated condition.
    pub fn condition(&self) -> &'static str {
        match self {
            Violation::SharedEntry { .. } => "no top-level xor-split",
            Violation::SharedExit { .. } => "no top-level xor-join",
            Violation::EntriesNotEquivalent { .. } => "single entry",
            Violation::ExitsNotEquivalent { .. } => "single exit",
            Violation::EntryCount { .. } => "single entry place",
            Violation::ExitCount { .. } => "single exit place",
        }
    }
}

fn join_ids<'a>(ids: impl IntoIterator<Item = &'a NodeId>) -> String {
    ids.into_iter().map(NodeId::as_str).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.condition())?;
        match self {
            Violation::SharedEntry { place, parts } => write!(f, "`{place}` enters parts {parts:?}"),
            Violation::SharedExit { place, parts } => write!(f, "`{place}` leaves parts {parts:?}"),
            Violation::EntriesNotEquivalent { part, places: (p, q) }
            | Violation::ExitsNotEquivalent { part, places: (p, q) } => {
                write!(f, "`{p}` and `{q}` differ with respect to part {part}")
            }
            Violation::EntryCount { part, places } => {
                write!(f, "part {part} has entries {{{}}}", join_ids(places))
            }
            Violation::ExitCount { part, places } => {
                write!(f, "part {part} has exits {{{}}}", join_ids(places))
            }
        }
    }
}

/// Transitions reachable from `p` along paths whose transitions all differ
/// from `stop`. Direct consumers of `p` other than `stop` are included.
pub fn restricted_reach_fwd(net: &PetriNet, p: &NodeId, stop: &NodeId) -> Result<BTreeSet<NodeId>, NetError> {
    let p = net.place_index(p)?;
    let stop = net.transition_index(stop)?;
    Ok(net.transition_ids(&reach_avoiding(net, p, stop, true).ones().collect::<Vec<_>>()))
}

/// Transitions from which `p` is reachable along paths whose transitions all
/// differ from `stop`. Direct producers of `p` other than `stop` are included.
pub fn restricted_reach_bwd(net: &PetriNet, p: &NodeId, stop: &NodeId) -> Result<BTreeSet<NodeId>, NetError> {
    let p = net.place_index(p)?;
    let stop = net.transition_index(stop)?;
    Ok(net.transition_ids(&reach_avoiding(net, p, stop, false).ones().collect::<Vec<_>>()))
}

pub(crate) fn reach_avoiding(net: &PetriNet, p: usize, stop: usize, forward: bool) -> FixedBitSet {
    let mut seen_t = FixedBitSet::with_capacity(net.transition_count());
    let mut seen_p = FixedBitSet::with_capacity(net.place_count());
    seen_p.insert(p);
    let mut stack = vec![p];
    while let Some(q) = stack.pop() {
        let next_t = if forward { net.place_post(q) } else { net.place_pre(q) };
        for &t in next_t {
            if t == stop || seen_t.put(t) {
                continue;
            }
            let next_p = if forward { net.transition_post(t) } else { net.transition_pre(t) };
            for &r in next_p {
                if !seen_p.put(r) {
                    stack.push(r);
                }
            }
        }
    }
    seen_t
}

/// Turns `net` into a workflow net with source `p_s` and sink `p_e`, adding a
/// fresh source place and silent transition in front of `p_s` if it has
/// producers, and likewise a silent transition and fresh sink after `p_e` if
/// it has consumers.
pub fn normalize(net: PetriNet, p_s: &NodeId, p_e: &NodeId, ids: &IdSource) -> Result<WorkflowNet, DecomposeError> {
    let s = net.place_index(p_s)?;
    let e = net.place_index(p_e)?;
    let dirty_start = !net.place_pre(s).is_empty();
    let dirty_end = !net.place_post(e).is_empty();
    if !dirty_start && !dirty_end {
        return Ok(WorkflowNet::validate(net)?);
    }
    let mut places: Vec<NodeId> = net.places().to_vec();
    let mut transitions: Vec<(NodeId, Label)> =
        net.transitions().iter().cloned().zip(net.labels().iter().cloned()).collect();
    let mut arcs: Vec<(NodeId, NodeId)> = net.arcs().collect();
    if dirty_start {
        let (src, t) = (ids.place(), ids.transition());
        places.push(src.clone());
        transitions.push((t.clone(), Label::Silent));
        arcs.push((src, t.clone()));
        arcs.push((t, p_s.clone()));
    }
    if dirty_end {
        let (snk, t) = (ids.place(), ids.transition());
        places.push(snk.clone());
        transitions.push((t.clone(), Label::Silent));
        arcs.push((p_e.clone(), t.clone()));
        arcs.push((t, snk));
    }
    let net = PetriNet::from_parts(places, transitions, arcs)?;
    Ok(WorkflowNet::validate(net)?)
}

/// Dense part masks for `g`, checking that it partitions the transitions of
/// `net` exactly.
/// Union-find over the dense transitions of `net` with the classes of `g`.
pub(crate) fn seeded(net: &PetriNet, g: &TransitionPartition) -> Result<UnionFind<usize>, DecomposeError> {
    let mut uf = UnionFind::new(net.transition_count());
    for part in g.parts() {
        let idx = part.iter().map(|t| net.transition_index(t)).collect::<Result<Vec<_>, _>>()?;
        order::merge(&mut uf, &idx);
    }
    if !g.covers(net.transitions()) {
        return Err(DecomposeError::NotAPartition);
    }
    Ok(uf)
}

pub(crate) fn part_masks(net: &PetriNet, g: &TransitionPartition) -> Result<Vec<FixedBitSet>, DecomposeError> {
    if !g.covers(net.transitions()) {
        return Err(DecomposeError::NotAPartition);
    }
    g.parts().iter().map(|part| Ok(net.transition_mask(part)?)).collect()
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::behavior::test_util::wf;
    use crate::net::WorkflowNet;

    /// a; (b || c); d
    pub fn and_block() -> WorkflowNet {
        wf(&[
            ("i", "a"),
            ("a", "p1"),
            ("a", "p2"),
            ("p1", "b"),
            ("p2", "c"),
            ("b", "p3"),
            ("c", "p4"),
            ("p3", "d"),
            ("p4", "d"),
            ("d", "o"),
        ])
    }

    /// a; (b | c); d
    pub fn xor_block() -> WorkflowNet {
        wf(&[
            ("i", "a"),
            ("a", "p1"),
            ("p1", "b"),
            ("p1", "c"),
            ("b", "p2"),
            ("c", "p2"),
            ("p2", "d"),
            ("d", "o"),
        ])
    }

    /// a; b; c
    pub fn sequence() -> WorkflowNet {
        wf(&[("i", "a"), ("a", "p1"), ("p1", "b"), ("b", "p2"), ("p2", "c"), ("c", "o")])
    }

    /// a; (b; c)* with exit e
    pub fn loop_net() -> WorkflowNet {
        wf(&[
            ("i", "a"),
            ("a", "p1"),
            ("p1", "b"),
            ("b", "p2"),
            ("p2", "c"),
            ("c", "p1"),
            ("p2", "e"),
            ("e", "o"),
        ])
    }
}
