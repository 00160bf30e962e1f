//! Place/transition nets and workflow nets.
//!
//! Nodes are addressed by [`NodeId`], an opaque string token. Inside a
//! [`PetriNet`] places and transitions are also stored densely, sorted by id,
//! so index order and id order agree. The dense indices are what the analysis
//! code works with; they are only meaningful for the net they came from.

mod fresh;
mod iso;
mod structure;
mod substitute;
mod workflow;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use fresh::IdSource;
pub use iso::{IsoVerdict, DEFAULT_ISO_BUDGET};
pub use workflow::{WfError, WorkflowNet};

/// Identifier of a place or a transition.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(Arc<str>);

impl NodeId {
    pub fn new(id: impl AsRef<str>) -> Self {
        NodeId(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId::new(s)
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(Arc::from(s))
    }
}

/// Transition label: a visible activity or the silent activity τ.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Silent,
    Visible(Arc<str>),
}

impl Label {
    /// Visible label. An empty name is treated as silent.
    pub fn visible(name: impl AsRef<str>) -> Self {
        let name = name.as_ref();
        if name.is_empty() {
            Label::Silent
        } else {
            Label::Visible(Arc::from(name))
        }
    }

    pub fn is_silent(&self) -> bool {
        matches!(self, Label::Silent)
    }

    pub fn activity(&self) -> Option<&Arc<str>> {
        match self {
            Label::Silent => None,
            Label::Visible(a) => Some(a),
        }
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Silent => f.write_str("τ"),
            Label::Visible(a) => f.write_str(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("node `{0}` is declared twice")]
    DuplicateNode(NodeId),
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("`{0}` is not a place")]
    NotAPlace(NodeId),
    #[error("`{0}` is not a transition")]
    NotATransition(NodeId),
    #[error("arc {0} -> {1} must connect a place and a transition")]
    InvalidArc(NodeId, NodeId),
    #[error("node `{0}` occurs in both nets")]
    IdentifierCollision(NodeId),
}

/// Dense reference to a node of a particular net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRef {
    Place(usize),
    Transition(usize),
}

/// A Petri net `(P, T, F)` with a labeling of its transitions.
///
/// Immutable once built; use [`PetriNetBuilder`] to construct one.
#[derive(Clone)]
pub struct PetriNet {
    places: Vec<NodeId>,
    transitions: Vec<NodeId>,
    labels: Vec<Label>,
    place_pre: Vec<Vec<usize>>,
    place_post: Vec<Vec<usize>>,
    trans_pre: Vec<Vec<usize>>,
    trans_post: Vec<Vec<usize>>,
    lookup: HashMap<NodeId, NodeRef>,
    arc_count: usize,
}

impl fmt::Debug for PetriNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PetriNet")
            .field("places", &self.places)
            .field(
                "transitions",
                &self
                    .transitions
                    .iter()
                    .zip(&self.labels)
                    .map(|(t, l)| format!("{t}[{l}]"))
                    .collect::<Vec<_>>(),
            )
            .field("arcs", &self.arcs().collect::<Vec<_>>())
            .finish()
    }
}

/// Collects nodes and arcs; duplicate arcs collapse since the flow is a set.
#[derive(Debug, Default, Clone)]
pub struct PetriNetBuilder {
    places: Vec<NodeId>,
    transitions: Vec<(NodeId, Label)>,
    arcs: Vec<(NodeId, NodeId)>,
}

impl PetriNetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(&mut self, id: impl Into<NodeId>) -> &mut Self {
        self.places.push(id.into());
        self
    }

    pub fn transition(&mut self, id: impl Into<NodeId>, label: Label) -> &mut Self {
        self.transitions.push((id.into(), label));
        self
    }

    pub fn arc(&mut self, from: impl Into<NodeId>, to: impl Into<NodeId>) -> &mut Self {
        self.arcs.push((from.into(), to.into()));
        self
    }

    pub fn build(&self) -> Result<PetriNet, NetError> {
        PetriNet::from_parts(
            self.places.iter().cloned(),
            self.transitions.iter().cloned(),
            self.arcs.iter().cloned(),
        )
    }
}

impl PetriNet {
    pub fn from_parts(
        places: impl IntoIterator<Item = NodeId>,
        transitions: impl IntoIterator<Item = (NodeId, Label)>,
        arcs: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, NetError> {
        let mut places: Vec<NodeId> = places.into_iter().collect();
        let mut transitions: Vec<(NodeId, Label)> = transitions.into_iter().collect();
        places.sort();
        transitions.sort_by(|a, b| a.0.cmp(&b.0));

        let mut lookup = HashMap::with_capacity(places.len() + transitions.len());
        for (i, p) in places.iter().enumerate() {
            if lookup.insert(p.clone(), NodeRef::Place(i)).is_some() {
                return Err(NetError::DuplicateNode(p.clone()));
            }
        }
        for (i, (t, _)) in transitions.iter().enumerate() {
            if lookup.insert(t.clone(), NodeRef::Transition(i)).is_some() {
                return Err(NetError::DuplicateNode(t.clone()));
            }
        }

        let mut place_pre = vec![Vec::new(); places.len()];
        let mut place_post = vec![Vec::new(); places.len()];
        let mut trans_pre = vec![Vec::new(); transitions.len()];
        let mut trans_post = vec![Vec::new(); transitions.len()];
        for (from, to) in arcs {
            let a = *lookup
                .get(&from)
                .ok_or_else(|| NetError::UnknownNode(from.clone()))?;
            let b = *lookup
                .get(&to)
                .ok_or_else(|| NetError::UnknownNode(to.clone()))?;
            match (a, b) {
                (NodeRef::Place(p), NodeRef::Transition(t)) => {
                    place_post[p].push(t);
                    trans_pre[t].push(p);
                }
                (NodeRef::Transition(t), NodeRef::Place(p)) => {
                    trans_post[t].push(p);
                    place_pre[p].push(t);
                }
                _ => return Err(NetError::InvalidArc(from, to)),
            }
        }
        let mut arc_count = 0;
        for adj in place_pre
            .iter_mut()
            .chain(place_post.iter_mut())
            .chain(trans_pre.iter_mut())
            .chain(trans_post.iter_mut())
        {
            adj.sort_unstable();
            adj.dedup();
        }
        for adj in place_pre.iter().chain(place_post.iter()) {
            arc_count += adj.len();
        }

        let (transitions, labels) = transitions.into_iter().unzip();
        Ok(PetriNet {
            places,
            transitions,
            labels,
            place_pre,
            place_post,
            trans_pre,
            trans_post,
            lookup,
            arc_count,
        })
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arc_count
    }

    pub fn places(&self) -> &[NodeId] {
        &self.places
    }

    pub fn transitions(&self) -> &[NodeId] {
        &self.transitions
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn place_id(&self, p: usize) -> &NodeId {
        &self.places[p]
    }

    pub fn transition_id(&self, t: usize) -> &NodeId {
        &self.transitions[t]
    }

    pub fn label(&self, t: usize) -> &Label {
        &self.labels[t]
    }

    pub fn node(&self, id: &NodeId) -> Option<NodeRef> {
        self.lookup.get(id).copied()
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.lookup.contains_key(id)
    }

    pub fn place_index(&self, id: &NodeId) -> Result<usize, NetError> {
        match self.lookup.get(id) {
            Some(NodeRef::Place(p)) => Ok(*p),
            Some(NodeRef::Transition(_)) => Err(NetError::NotAPlace(id.clone())),
            None => Err(NetError::UnknownNode(id.clone())),
        }
    }

    pub fn transition_index(&self, id: &NodeId) -> Result<usize, NetError> {
        match self.lookup.get(id) {
            Some(NodeRef::Transition(t)) => Ok(*t),
            Some(NodeRef::Place(_)) => Err(NetError::NotATransition(id.clone())),
            None => Err(NetError::UnknownNode(id.clone())),
        }
    }

    pub fn label_of(&self, id: &NodeId) -> Result<&Label, NetError> {
        Ok(&self.labels[self.transition_index(id)?])
    }

    /// Transitions producing into place `p`.
    pub fn place_pre(&self, p: usize) -> &[usize] {
        &self.place_pre[p]
    }

    /// Transitions consuming from place `p`.
    pub fn place_post(&self, p: usize) -> &[usize] {
        &self.place_post[p]
    }

    /// Input places of transition `t`.
    pub fn transition_pre(&self, t: usize) -> &[usize] {
        &self.trans_pre[t]
    }

    /// Output places of transition `t`.
    pub fn transition_post(&self, t: usize) -> &[usize] {
        &self.trans_post[t]
    }

    /// All arcs, place-to-transition arcs first, each group in id order.
    pub fn arcs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        let pt = self.place_post.iter().enumerate().flat_map(move |(p, ts)| {
            ts.iter()
                .map(move |&t| (self.places[p].clone(), self.transitions[t].clone()))
        });
        let tp = self.trans_post.iter().enumerate().flat_map(move |(t, ps)| {
            ps.iter()
                .map(move |&p| (self.transitions[t].clone(), self.places[p].clone()))
        });
        pt.chain(tp)
    }

    pub fn has_arc(&self, from: &NodeId, to: &NodeId) -> bool {
        match (self.node(from), self.node(to)) {
            (Some(NodeRef::Place(p)), Some(NodeRef::Transition(t))) => {
                self.place_post[p].binary_search(&t).is_ok()
            }
            (Some(NodeRef::Transition(t)), Some(NodeRef::Place(p))) => {
                self.trans_post[t].binary_search(&p).is_ok()
            }
            _ => false,
        }
    }

    /// Pre-set `•x` of a place or transition.
    pub fn preset(&self, id: &NodeId) -> Result<BTreeSet<NodeId>, NetError> {
        Ok(match self.node(id) {
            Some(NodeRef::Place(p)) => self.transition_ids(&self.place_pre[p]),
            Some(NodeRef::Transition(t)) => self.place_ids(&self.trans_pre[t]),
            None => return Err(NetError::UnknownNode(id.clone())),
        })
    }

    /// Post-set `x•` of a place or transition.
    pub fn postset(&self, id: &NodeId) -> Result<BTreeSet<NodeId>, NetError> {
        Ok(match self.node(id) {
            Some(NodeRef::Place(p)) => self.transition_ids(&self.place_post[p]),
            Some(NodeRef::Transition(t)) => self.place_ids(&self.trans_post[t]),
            None => return Err(NetError::UnknownNode(id.clone())),
        })
    }

    pub(crate) fn place_ids(&self, idx: &[usize]) -> BTreeSet<NodeId> {
        idx.iter().map(|&p| self.places[p].clone()).collect()
    }

    pub(crate) fn transition_ids(&self, idx: &[usize]) -> BTreeSet<NodeId> {
        idx.iter().map(|&t| self.transitions[t].clone()).collect()
    }

    /// Resolves a set of transition ids to a dense membership mask.
    pub fn transition_mask<'a>(
        &self,
        ids: impl IntoIterator<Item = &'a NodeId>,
    ) -> Result<fixedbitset::FixedBitSet, NetError> {
        let mut mask = fixedbitset::FixedBitSet::with_capacity(self.transition_count());
        for id in ids {
            mask.insert(self.transition_index(id)?);
        }
        Ok(mask)
    }

    /// Sorted multiset of labels, used as a cheap isomorphism invariant.
    pub fn label_multiset(&self) -> Vec<Label> {
        let mut labels = self.labels.clone();
        labels.sort();
        labels
    }
}

#[cfg(test)]
pub(crate) mod test_nets {
    use super::*;

    /// Builds a net from `src -> t -> dst` triples, creating nodes on the fly.
    /// Place ids start with `p` or are `i`/`o`; everything else is a transition
    /// labeled by its own id.
    pub fn chain_net(edges: &[(&str, &str)]) -> PetriNet {
        let mut places = BTreeSet::new();
        let mut transitions = BTreeSet::new();
        for &(a, b) in edges {
            for n in [a, b] {
                if n.starts_with('p') || n == "i" || n == "o" {
                    places.insert(n);
                } else {
                    transitions.insert(n);
                }
            }
        }
        PetriNet::from_parts(
            places.into_iter().map(NodeId::from),
            transitions
                .into_iter()
                .map(|t| (NodeId::from(t), Label::visible(t))),
            edges
                .iter()
                .map(|&(a, b)| (NodeId::from(a), NodeId::from(b))),
        )
        .unwrap()
    }

    pub fn ids(xs: &[&str]) -> BTreeSet<NodeId> {
        xs.iter().map(|&x| NodeId::from(x)).collect()
    }
}
