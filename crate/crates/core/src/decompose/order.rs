use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use petgraph::unionfind::UnionFind;

use crate::net::{IdSource, Label, NodeId, PetriNet, WorkflowNet};
use crate::partition::TransitionPartition;
use crate::powl::{OrderStruct, StructError};

use super::{normalize, part_masks, seeded, DecomposeError, Violation};

/// Partition whose parts hide every decision point: transitions exclusive to
/// some but not all branches of a place with several consumers (or several
/// producers) end up in one part.
///
/// With `reflexive` each transition counts as reaching itself, so the first
/// transitions of a branch belong to that branch's group.
pub fn po_partition(wf: &WorkflowNet, reflexive: bool) -> TransitionPartition {
    let net = wf.net();
    let n = net.transition_count();
    let reach = net.reachability_matrix(reflexive);
    let mut uf = UnionFind::new(n);
    for p in 0..net.place_count() {
        let split = net.place_post(p);
        if split.len() > 1 {
            // reached from some but not all consumers of p
            let group: Vec<usize> = (0..n)
                .filter(|&t| {
                    let k = split.iter().filter(|&&t1| reach[t1].contains(t)).count();
                    k >= 1 && k < split.len()
                })
                .collect();
            merge(&mut uf, &group);
        }
        let join = net.place_pre(p);
        if join.len() > 1 {
            let group: Vec<usize> = (0..n)
                .filter(|&t| {
                    let k = join.iter().filter(|&&t1| reach[t].contains(t1)).count();
                    k >= 1 && k < join.len()
                })
                .collect();
            merge(&mut uf, &group);
        }
    }
    TransitionPartition::from_classes(net, &uf)
}

/// Coarsens `g` until every place has all its consumers in one part and all
/// its producers in one part. The top-level parts of a net composed as a
/// marked graph of sub-nets have this shape, so the closure repairs parts
/// that `po_partition` leaves split when a cycle hides a branch's exclusivity.
pub fn po_closure(wf: &WorkflowNet, g: &TransitionPartition) -> Result<TransitionPartition, DecomposeError> {
    let net = wf.net();
    let mut uf = seeded(net, g)?;
    for p in 0..net.place_count() {
        merge(&mut uf, net.place_post(p));
        merge(&mut uf, net.place_pre(p));
    }
    Ok(TransitionPartition::from_classes(net, &uf))
}

pub(super) fn merge(uf: &mut UnionFind<usize>, group: &[usize]) {
    if let Some((&first, rest)) = group.split_first() {
        for &t in rest {
            uf.union(first, t);
        }
    }
}

/// Every broken condition of a conflict-hiding partition; empty when `g` is
/// conflict-hiding.
pub fn is_conflict_hiding(wf: &WorkflowNet, g: &TransitionPartition) -> Result<Vec<Violation>, DecomposeError> {
    let net = wf.net();
    let masks = part_masks(net, g)?;
    let entries: Vec<Vec<usize>> = masks.iter().map(|m| wf.entry_mask(m)).collect();
    let exits: Vec<Vec<usize>> = masks.iter().map(|m| wf.exit_mask(m)).collect();
    let mut out = Vec::new();
    for (ends, shared) in [(&entries, true), (&exits, false)] {
        let mut users: Vec<Vec<usize>> = vec![Vec::new(); net.place_count()];
        for (i, ps) in ends.iter().enumerate() {
            for &p in ps {
                users[p].push(i);
            }
        }
        for (p, parts) in users.into_iter().enumerate() {
            if parts.len() > 1 {
                let place = net.place_id(p).clone();
                out.push(if shared {
                    Violation::SharedEntry { place, parts }
                } else {
                    Violation::SharedExit { place, parts }
                });
            }
        }
    }
    for (i, mask) in masks.iter().enumerate() {
        for (ends, entry) in [(&entries[i], true), (&exits[i], false)] {
            let Some((&first, rest)) = ends.split_first() else { continue };
            for &q in rest {
                if !net.places_equivalent_mask(mask, first, q) {
                    let places = (net.place_id(first).clone(), net.place_id(q).clone());
                    out.push(if entry {
                        Violation::EntriesNotEquivalent { part: i, places }
                    } else {
                        Violation::ExitsNotEquivalent { part: i, places }
                    });
                }
            }
        }
    }
    Ok(out)
}

/// The sub-net of `part` with all entry points merged into one fresh start
/// place and all exit points into one fresh end place, then normalized.
pub fn po_project(wf: &WorkflowNet, part: &BTreeSet<NodeId>, ids: &IdSource) -> Result<WorkflowNet, DecomposeError> {
    let net = wf.net();
    let mask = net.transition_mask(part)?;
    let mut pre = FixedBitSet::with_capacity(net.place_count());
    pre.extend(wf.entry_mask(&mask));
    let mut post = FixedBitSet::with_capacity(net.place_count());
    post.extend(wf.exit_mask(&mask));
    let (p_s, p_e) = (ids.place(), ids.place());

    let mut places = vec![p_s.clone(), p_e.clone()];
    let mut arcs = Vec::new();
    for p in net.project_places_mask(&mask) {
        let id = net.place_id(p);
        let targets: Vec<&NodeId> = match (pre.contains(p), post.contains(p)) {
            (false, false) => {
                places.push(id.clone());
                vec![id]
            }
            (s, e) => [(s, &p_s), (e, &p_e)].into_iter().filter(|x| x.0).map(|x| x.1).collect(),
        };
        for &t in net.place_post(p).iter().filter(|&&t| mask.contains(t)) {
            for &q in &targets {
                arcs.push((q.clone(), net.transition_id(t).clone()));
            }
        }
        for &t in net.place_pre(p).iter().filter(|&&t| mask.contains(t)) {
            for &q in &targets {
                arcs.push((net.transition_id(t).clone(), q.clone()));
            }
        }
    }
    let transitions = sub_transitions(net, &mask);
    let sub = PetriNet::from_parts(places, transitions, arcs)?;
    normalize(sub, &p_s, &p_e, ids)
}

pub(super) fn sub_transitions(net: &PetriNet, mask: &FixedBitSet) -> Vec<(NodeId, Label)> {
    mask.ones().map(|t| (net.transition_id(t).clone(), net.label(t).clone())).collect()
}

/// `i` precedes `j` when an exit point of part `i` is an entry point of part
/// `j`, closed transitively. Part indices follow `g`.
pub fn execution_order(wf: &WorkflowNet, g: &TransitionPartition) -> Result<OrderStruct, DecomposeError> {
    let net = wf.net();
    let masks = part_masks(net, g)?;
    let mut entry_of: Vec<Vec<usize>> = vec![Vec::new(); net.place_count()];
    for (j, m) in masks.iter().enumerate() {
        for p in wf.entry_mask(m) {
            entry_of[p].push(j);
        }
    }
    let mut pairs = Vec::new();
    for (i, m) in masks.iter().enumerate() {
        for p in wf.exit_mask(m) {
            for &j in &entry_of[p] {
                if i == j {
                    return Err(DecomposeError::CyclicOrder(i));
                }
                pairs.push((i, j));
            }
        }
    }
    OrderStruct::new(masks.len(), pairs).map_err(|e| match e {
        StructError::CyclicOrder(i) => DecomposeError::CyclicOrder(i),
        other => DecomposeError::InvalidOrder(other),
    })
}
