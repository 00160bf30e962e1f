//! Partitions of a transition set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::unionfind::UnionFind;
use thiserror::Error;

use crate::net::{NodeId, PetriNet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("empty part")]
    EmptyPart,
    #[error("`{0}` occurs in more than one part")]
    Overlap(NodeId),
}

/// Disjoint, non-empty parts. Parts are kept in ascending order of their
/// smallest member, so part indices are reproducible.
#[derive(Clone, PartialEq, Eq)]
pub struct TransitionPartition {
    parts: Vec<BTreeSet<NodeId>>,
    owner: BTreeMap<NodeId, usize>,
}

impl TransitionPartition {
    pub fn new(parts: impl IntoIterator<Item = BTreeSet<NodeId>>) -> Result<Self, PartitionError> {
        let mut parts: Vec<BTreeSet<NodeId>> = parts.into_iter().collect();
        if parts.iter().any(BTreeSet::is_empty) {
            return Err(PartitionError::EmptyPart);
        }
        parts.sort_by(|a, b| a.first().cmp(&b.first()));
        let mut owner = BTreeMap::new();
        for (i, part) in parts.iter().enumerate() {
            for t in part {
                if owner.insert(t.clone(), i).is_some() {
                    return Err(PartitionError::Overlap(t.clone()));
                }
            }
        }
        Ok(TransitionPartition { parts, owner })
    }

    /// One part per union-find class over the dense transitions of `net`.
    pub(crate) fn from_classes(net: &PetriNet, uf: &UnionFind<usize>) -> Self {
        let mut classes: BTreeMap<usize, BTreeSet<NodeId>> = BTreeMap::new();
        for t in 0..net.transition_count() {
            classes
                .entry(uf.find(t))
                .or_default()
                .insert(net.transition_id(t).clone());
        }
        Self::new(classes.into_values()).expect("union-find classes are disjoint")
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn parts(&self) -> &[BTreeSet<NodeId>] {
        &self.parts
    }

    pub fn part(&self, i: usize) -> &BTreeSet<NodeId> {
        &self.parts[i]
    }

    /// Index of the part containing `t`.
    pub fn part_of(&self, t: &NodeId) -> Option<usize> {
        self.owner.get(t).copied()
    }

    pub fn covers(&self, transitions: &[NodeId]) -> bool {
        transitions.len() == self.owner.len() && transitions.iter().all(|t| self.owner.contains_key(t))
    }
}

impl fmt::Debug for TransitionPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.parts).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[&str]) -> BTreeSet<NodeId> {
        xs.iter().map(|&x| NodeId::from(x)).collect()
    }

    #[test]
    fn ordering_and_lookup() {
        let g = TransitionPartition::new([set(&["d", "c"]), set(&["a"]), set(&["b"])]).unwrap();
        assert_eq!(g.parts()[0], set(&["a"]));
        assert_eq!(g.part_of(&"c".into()), Some(2));
        assert_eq!(g.part_of(&"zz".into()), None);
        assert!(g.covers(&["a".into(), "b".into(), "c".into(), "d".into()]));
        assert!(!g.covers(&["a".into(), "b".into(), "c".into()]));
    }

    #[test]
    fn rejects_bad_parts() {
        assert_eq!(
            TransitionPartition::new([set(&["a"]), set(&[])]).unwrap_err(),
            PartitionError::EmptyPart
        );
        assert_eq!(
            TransitionPartition::new([set(&["a", "b"]), set(&["b"])]).unwrap_err(),
            PartitionError::Overlap("b".into())
        );
    }
}
