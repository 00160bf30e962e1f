use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;

use super::{NetError, NodeId, PetriNet};

impl PetriNet {
    /// Places adjacent (in either direction) to at least one transition of `subset`.
    pub fn project_places(&self, subset: &BTreeSet<NodeId>) -> Result<BTreeSet<NodeId>, NetError> {
        let mask = self.transition_mask(subset)?;
        Ok(self
            .project_places_mask(&mask)
            .into_iter()
            .map(|p| self.places[p].clone())
            .collect())
    }

    pub(crate) fn project_places_mask(&self, mask: &FixedBitSet) -> Vec<usize> {
        (0..self.place_count())
            .filter(|&p| {
                self.place_pre[p]
                    .iter()
                    .chain(&self.place_post[p])
                    .any(|&t| mask.contains(t))
            })
            .collect()
    }

    /// Arcs whose endpoints both lie in `places ∪ transitions`.
    pub fn project_flow(
        &self,
        places: &BTreeSet<NodeId>,
        transitions: &BTreeSet<NodeId>,
    ) -> Result<BTreeSet<(NodeId, NodeId)>, NetError> {
        let tmask = self.transition_mask(transitions)?;
        let mut pmask = FixedBitSet::with_capacity(self.place_count());
        for p in places {
            pmask.insert(self.place_index(p)?);
        }
        let mut out = BTreeSet::new();
        for p in pmask.ones() {
            for &t in &self.place_post[p] {
                if tmask.contains(t) {
                    out.insert((self.places[p].clone(), self.transitions[t].clone()));
                }
            }
            for &t in &self.place_pre[p] {
                if tmask.contains(t) {
                    out.insert((self.transitions[t].clone(), self.places[p].clone()));
                }
            }
        }
        Ok(out)
    }

    /// Row `t` holds every transition reachable from `t` by a non-empty path
    /// (plus `t` itself when `reflexive`).
    pub fn reachability_matrix(&self, reflexive: bool) -> Vec<FixedBitSet> {
        let n = self.transition_count();
        // one-step successor transitions
        let succ: Vec<Vec<usize>> = (0..n)
            .map(|t| {
                let mut s: Vec<usize> = self.trans_post[t]
                    .iter()
                    .flat_map(|&p| self.place_post[p].iter().copied())
                    .collect();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        let mut rows = Vec::with_capacity(n);
        let mut stack = Vec::new();
        for t in 0..n {
            let mut seen = FixedBitSet::with_capacity(n);
            stack.extend(succ[t].iter().copied());
            while let Some(u) = stack.pop() {
                if seen.put(u) {
                    continue;
                }
                stack.extend(succ[u].iter().copied().filter(|&v| !seen.contains(v)));
            }
            if reflexive {
                seen.insert(t);
            }
            rows.push(seen);
        }
        rows
    }

    /// The transition reachability relation as explicit pairs.
    pub fn transition_reachability(&self, reflexive: bool) -> BTreeSet<(NodeId, NodeId)> {
        let rows = self.reachability_matrix(reflexive);
        let mut out = BTreeSet::new();
        for (t, row) in rows.iter().enumerate() {
            for u in row.ones() {
                out.insert((self.transitions[t].clone(), self.transitions[u].clone()));
            }
        }
        out
    }

    /// `p ≈ q` with respect to `subset`: same producers and consumers inside it.
    pub fn places_equivalent(
        &self,
        subset: &BTreeSet<NodeId>,
        p: &NodeId,
        q: &NodeId,
    ) -> Result<bool, NetError> {
        let mask = self.transition_mask(subset)?;
        let p = self.place_index(p)?;
        let q = self.place_index(q)?;
        Ok(self.places_equivalent_mask(&mask, p, q))
    }

    pub(crate) fn places_equivalent_mask(&self, mask: &FixedBitSet, p: usize, q: usize) -> bool {
        let filt = |adj: &[usize]| -> Vec<usize> {
            adj.iter().copied().filter(|&t| mask.contains(t)).collect()
        };
        filt(&self.place_pre[p]) == filt(&self.place_pre[q])
            && filt(&self.place_post[p]) == filt(&self.place_post[q])
    }

    /// Transitions sharing an input place share all input places.
    pub fn is_free_choice(&self) -> bool {
        self.place_post.iter().all(|consumers| {
            consumers
                .windows(2)
                .all(|w| self.trans_pre[w[0]] == self.trans_pre[w[1]])
        })
    }

    pub fn is_state_machine(&self) -> bool {
        (0..self.transition_count())
            .all(|t| self.trans_pre[t].len() <= 1 && self.trans_post[t].len() <= 1)
    }

    pub fn is_marked_graph(&self) -> bool {
        (0..self.place_count())
            .all(|p| self.place_pre[p].len() <= 1 && self.place_post[p].len() <= 1)
    }
}
