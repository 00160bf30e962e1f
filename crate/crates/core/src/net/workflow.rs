use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use super::{NetError, NodeId, NodeRef, PetriNet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WfError {
    #[error("no place with an empty pre-set")]
    NoSource,
    #[error("several places with an empty pre-set: {0:?}")]
    MultipleSources(Vec<NodeId>),
    #[error("no place with an empty post-set")]
    NoSink,
    #[error("several places with an empty post-set: {0:?}")]
    MultipleSinks(Vec<NodeId>),
    #[error("nodes not on any source-to-sink path: {0:?}")]
    DisconnectedNode(Vec<NodeId>),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// A Petri net with a unique source and sink place such that every node lies
/// on a path between them.
#[derive(Debug, Clone)]
pub struct WorkflowNet {
    net: PetriNet,
    source: usize,
    sink: usize,
}

impl WorkflowNet {
    /// Identifies the source and sink and checks path coverage.
    pub fn validate(net: PetriNet) -> Result<Self, WfError> {
        let sources: Vec<usize> = (0..net.place_count())
            .filter(|&p| net.place_pre(p).is_empty())
            .collect();
        let sinks: Vec<usize> = (0..net.place_count())
            .filter(|&p| net.place_post(p).is_empty())
            .collect();
        let source = match sources.as_slice() {
            [] => return Err(WfError::NoSource),
            [s] => *s,
            many => return Err(WfError::MultipleSources(net.place_ids(many).into_iter().collect())),
        };
        let sink = match sinks.as_slice() {
            [] => return Err(WfError::NoSink),
            [s] => *s,
            many => return Err(WfError::MultipleSinks(net.place_ids(many).into_iter().collect())),
        };
        // Bitsets over places then transitions: index p or |P| + t.
        let np = net.place_count();
        let fwd = sweep(&net, NodeRef::Place(source), true);
        let bwd = sweep(&net, NodeRef::Place(sink), false);
        let mut off = Vec::new();
        for i in 0..np + net.transition_count() {
            if !(fwd.contains(i) && bwd.contains(i)) {
                off.push(if i < np {
                    net.place_id(i).clone()
                } else {
                    net.transition_id(i - np).clone()
                });
            }
        }
        if !off.is_empty() {
            off.sort();
            return Err(WfError::DisconnectedNode(off));
        }
        Ok(WorkflowNet { net, source, sink })
    }

    pub fn net(&self) -> &PetriNet {
        &self.net
    }

    pub fn into_net(self) -> PetriNet {
        self.net
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn source_id(&self) -> &NodeId {
        self.net.place_id(self.source)
    }

    pub fn sink_id(&self) -> &NodeId {
        self.net.place_id(self.sink)
    }

    /// Entry points of a transition subset: places feeding the subset that are
    /// the source or are fed from outside it.
    pub fn entry_points(&self, subset: &BTreeSet<NodeId>) -> Result<BTreeSet<NodeId>, NetError> {
        let mask = self.net.transition_mask(subset)?;
        Ok(self.net.place_ids(&self.entry_mask(&mask)))
    }

    /// Exit points: places fed by the subset that are the sink or feed
    /// transitions outside it.
    pub fn exit_points(&self, subset: &BTreeSet<NodeId>) -> Result<BTreeSet<NodeId>, NetError> {
        let mask = self.net.transition_mask(subset)?;
        Ok(self.net.place_ids(&self.exit_mask(&mask)))
    }

    pub(crate) fn entry_mask(&self, mask: &FixedBitSet) -> Vec<usize> {
        (0..self.net.place_count())
            .filter(|&p| {
                self.net.place_post(p).iter().any(|&t| mask.contains(t))
                    && (p == self.source
                        || self.net.place_pre(p).iter().any(|&t| !mask.contains(t)))
            })
            .collect()
    }

    pub(crate) fn exit_mask(&self, mask: &FixedBitSet) -> Vec<usize> {
        (0..self.net.place_count())
            .filter(|&p| {
                self.net.place_pre(p).iter().any(|&t| mask.contains(t))
                    && (p == self.sink
                        || self.net.place_post(p).iter().any(|&t| !mask.contains(t)))
            })
            .collect()
    }
}

fn sweep(net: &PetriNet, start: NodeRef, forward: bool) -> FixedBitSet {
    let np = net.place_count();
    let mut seen = FixedBitSet::with_capacity(np + net.transition_count());
    let mut stack = vec![start];
    while let Some(n) = stack.pop() {
        let (idx, next): (usize, &[usize]) = match (n, forward) {
            (NodeRef::Place(p), true) => (p, net.place_post(p)),
            (NodeRef::Place(p), false) => (p, net.place_pre(p)),
            (NodeRef::Transition(t), true) => (np + t, net.transition_post(t)),
            (NodeRef::Transition(t), false) => (np + t, net.transition_pre(t)),
        };
        if seen.put(idx) {
            continue;
        }
        match n {
            NodeRef::Place(_) => stack.extend(next.iter().map(|&t| NodeRef::Transition(t))),
            NodeRef::Transition(_) => stack.extend(next.iter().map(|&p| NodeRef::Place(p))),
        }
    }
    seen
}
