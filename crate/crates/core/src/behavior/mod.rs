//! Token-game semantics and the behavioural oracle: reachability graphs,
//! safeness and soundness checks, and bounded language enumeration.

mod language;
mod reach;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::net::{NetError, NodeId, PetriNet};

pub use language::{
    bounded_equal, enumerate_language, enumerate_language_capped, format_trace, BoundedEq,
    LanguageError, Side,
    Trace, TraceSet,
};
pub use reach::{
    check_safe, check_sound, reachability_graph, ReachabilityGraph, SafetyVerdict,
    SoundnessVerdict, Truncation, Unsoundness, DEFAULT_STATE_BUDGET,
};

/// Multiset of places.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(BTreeMap<NodeId, u32>);

impl Marking {
    pub fn new() -> Self {
        Self::default()
    }

    /// One token per occurrence of a place in `places`.
    pub fn from_places<I, P>(places: I) -> Self
    where
        I: IntoIterator<Item = P>,
        P: Into<NodeId>,
    {
        let mut m = Marking::new();
        for p in places {
            m.add(p.into(), 1);
        }
        m
    }

    pub fn count(&self, p: &NodeId) -> u32 {
        self.0.get(p).copied().unwrap_or(0)
    }

    pub fn add(&mut self, p: NodeId, n: u32) {
        if n > 0 {
            *self.0.entry(p).or_insert(0) += n;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, u32)> {
        self.0.iter().map(|(p, &n)| (p, n))
    }

    /// Total number of tokens.
    pub fn size(&self) -> u32 {
        self.0.values().sum()
    }

    pub(crate) fn from_dense(net: &PetriNet, dense: &[u32]) -> Self {
        Marking::from_places(dense.iter().map(|&p| net.place_id(p as usize).clone()))
    }

    pub(crate) fn to_dense(&self, net: &PetriNet) -> Result<Vec<u32>, NetError> {
        let mut out = Vec::with_capacity(self.size() as usize);
        for (p, n) in self.iter() {
            let i = net.place_index(p)? as u32;
            out.extend(std::iter::repeat(i).take(n as usize));
        }
        out.sort_unstable();
        Ok(out)
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (p, n)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if n == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{n}")?;
            }
        }
        f.write_str("]")
    }
}

impl fmt::Debug for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FireError {
    #[error("`{0}` is not enabled")]
    NotEnabled(NodeId),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Transitions whose whole pre-set is marked in `m`.
pub fn enabled(net: &PetriNet, m: &Marking) -> Result<BTreeSet<NodeId>, NetError> {
    let dense = m.to_dense(net)?;
    Ok(dense_enabled(net, &dense)
        .into_iter()
        .map(|t| net.transition_id(t).clone())
        .collect())
}

/// Fires `t` at `m`: one token leaves every input place, one enters every
/// output place.
pub fn fire(net: &PetriNet, m: &Marking, t: &NodeId) -> Result<Marking, FireError> {
    let ti = net.transition_index(t)?;
    let dense = m.to_dense(net)?;
    if !dense_is_enabled(net, &dense, ti) {
        return Err(FireError::NotEnabled(t.clone()));
    }
    Ok(Marking::from_dense(net, &dense_fire(net, &dense, ti)))
}

// Dense markings are sorted multisets of place indices.

pub(crate) fn dense_is_enabled(net: &PetriNet, m: &[u32], t: usize) -> bool {
    net.transition_pre(t)
        .iter()
        .all(|&p| m.binary_search(&(p as u32)).is_ok())
}

pub(crate) fn dense_enabled(net: &PetriNet, m: &[u32]) -> Vec<usize> {
    let mut cand: Vec<usize> = m
        .iter()
        .flat_map(|&p| net.place_post(p as usize).iter().copied())
        .collect();
    cand.sort_unstable();
    cand.dedup();
    cand.retain(|&t| dense_is_enabled(net, m, t));
    cand
}

pub(crate) fn dense_fire(net: &PetriNet, m: &[u32], t: usize) -> Vec<u32> {
    let mut out = m.to_vec();
    for &p in net.transition_pre(t) {
        let i = out.binary_search(&(p as u32)).expect("enabled");
        out.remove(i);
    }
    for &p in net.transition_post(t) {
        let i = out.partition_point(|&q| q < p as u32);
        out.insert(i, p as u32);
    }
    out
}


#[cfg(test)]
mod tests {
    use super::test_util::wf;
    use super::*;

    #[test]
    fn enabled_basics() {
        let n = wf(&[("i", "a"), ("a", "o")]);
        assert_eq!(enabled(n.net(), &Marking::from_places(["i"])).unwrap().len(), 1);
        assert!(enabled(n.net(), &Marking::new()).unwrap().is_empty());

        let join = wf(&[("i", "a"), ("a", "p1"), ("a", "p2"), ("p1", "b"), ("p2", "b"), ("b", "o")]);
        assert!(enabled(join.net(), &Marking::from_places(["p1"])).unwrap().is_empty());
    }

    #[test]
    fn fire_basics() {
        let n = wf(&[("i", "a"), ("a", "o")]);
        let m = fire(n.net(), &Marking::from_places(["i"]), &"a".into()).unwrap();
        assert_eq!(m, Marking::from_places(["o"]));
        assert_eq!(
            fire(n.net(), &m, &"a".into()).unwrap_err(),
            FireError::NotEnabled("a".into())
        );

        let split = wf(&[("i", "a"), ("a", "p1"), ("a", "p2"), ("p1", "b"), ("p2", "b"), ("b", "o")]);
        let m = fire(split.net(), &Marking::from_places(["i"]), &"a".into()).unwrap();
        assert_eq!(m, Marking::from_places(["p1", "p2"]));
    }

    #[test]
    fn loop_returns_to_seen_marking() {
        let n = wf(&[("i", "a"), ("a", "p1"), ("p1", "b"), ("b", "p2"), ("p2", "c"), ("c", "p1"), ("p2", "d"), ("d", "o")]);
        let m1 = fire(n.net(), &Marking::from_places(["i"]), &"a".into()).unwrap();
        let m2 = fire(n.net(), &m1, &"b".into()).unwrap();
        let m3 = fire(n.net(), &m2, &"c".into()).unwrap();
        assert_eq!(m1, m3);
    }

    #[test]
    fn marking_display() {
        let mut m = Marking::from_places(["p1", "p2"]);
        m.add("p2".into(), 1);
        assert_eq!(m.to_string(), "[p1, p2^2]");
        assert_eq!(m.size(), 3);
    }
}
