use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use petgraph::algo::dominators::{simple_fast, Dominators};
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::unionfind::UnionFind;

use crate::net::{IdSource, NodeId, PetriNet, WorkflowNet};
use crate::partition::TransitionPartition;
use crate::powl::{CgNode, ChoiceGraphStruct};

use super::order::{merge, sub_transitions};
use super::{normalize, part_masks, reach_avoiding, seeded, DecomposeError, Violation};

/// Partition whose parts hide all concurrency: every AND-split is merged with
/// the transitions that only some of its branches can reach before coming
/// back to it, and every AND-join with the transitions that feed only some of
/// its branches.
pub fn cg_partition(wf: &WorkflowNet) -> TransitionPartition {
    let net = wf.net();
    let mut uf = UnionFind::new(net.transition_count());
    for forward in [true, false] {
        for t in 0..net.transition_count() {
            let branches = if forward { net.transition_post(t) } else { net.transition_pre(t) };
            if branches.len() < 2 {
                continue;
            }
            let sets: Vec<FixedBitSet> = branches.iter().map(|&p| reach_avoiding(net, p, t, forward)).collect();
            let mut some = FixedBitSet::with_capacity(net.transition_count());
            let mut all = sets[0].clone();
            for s in &sets {
                some.union_with(s);
                all.intersect_with(s);
            }
            some.difference_with(&all);
            let group: Vec<usize> = std::iter::once(t).chain(some.ones()).collect();
            merge(&mut uf, &group);
        }
    }
    TransitionPartition::from_classes(net, &uf)
}

/// Coarsens `g` along two invariants of nets composed as a state machine of
/// sub-nets, neither of which ever merges across a top-level part:
///
/// - a transition with several output (input) places shares its part with
///   all transitions around those places;
/// - the entry points of a part lie inside its top-level part or are that
///   part's entry, so their nearest common dominator place does too, and so
///   does every path from it to the entries that does not come back to it
///   (dually for exits and post-dominance).
///
/// This repairs parts that `cg_partition` leaves split when a cycle lets
/// every branch reach everything.
pub fn cg_closure(wf: &WorkflowNet, g: &TransitionPartition) -> Result<TransitionPartition, DecomposeError> {
    let net = wf.net();
    let mut uf = seeded(net, g)?;
    let dom = Dominance::new(wf);
    let mut count = g.len();
    loop {
        for t in 0..net.transition_count() {
            for places in [net.transition_post(t), net.transition_pre(t)] {
                if places.len() < 2 {
                    continue;
                }
                for &p in places {
                    for &u in net.place_pre(p).iter().chain(net.place_post(p)) {
                        uf.union(t, u);
                    }
                }
            }
        }
        let current = TransitionPartition::from_classes(net, &uf);
        for mask in part_masks(net, &current)? {
            let first = mask.ones().next().expect("parts are non-empty");
            for (ends, forward) in [(wf.entry_mask(&mask), true), (wf.exit_mask(&mask), false)] {
                if let Some(between) = dominated_paths(wf, &dom, &ends, forward) {
                    for t in between.ones() {
                        uf.union(first, t);
                    }
                }
            }
        }
        let next = TransitionPartition::from_classes(net, &uf);
        if next.len() == count {
            return Ok(next);
        }
        count = next.len();
    }
}

/// Dominator trees of the flow graph of a workflow net, from the source and
/// (on reversed arcs) from the sink. Places are nodes `0..|P|`, transitions
/// follow.
struct Dominance {
    from_source: Dominators<NodeIndex>,
    from_sink: Dominators<NodeIndex>,
}

impl Dominance {
    fn new(wf: &WorkflowNet) -> Self {
        let net = wf.net();
        let np = net.place_count();
        let mut fwd: DiGraph<(), ()> = DiGraph::new();
        let mut bwd: DiGraph<(), ()> = DiGraph::new();
        for _ in 0..np + net.transition_count() {
            fwd.add_node(());
            bwd.add_node(());
        }
        for t in 0..net.transition_count() {
            let tn = NodeIndex::new(np + t);
            for &p in net.transition_pre(t) {
                fwd.add_edge(NodeIndex::new(p), tn, ());
                bwd.add_edge(tn, NodeIndex::new(p), ());
            }
            for &p in net.transition_post(t) {
                fwd.add_edge(tn, NodeIndex::new(p), ());
                bwd.add_edge(NodeIndex::new(p), tn, ());
            }
        }
        Dominance {
            from_source: simple_fast(&fwd, NodeIndex::new(wf.source())),
            from_sink: simple_fast(&bwd, NodeIndex::new(wf.sink())),
        }
    }

    /// The nearest place dominating every place of `ends` (post-dominating,
    /// when not `forward`).
    fn common(&self, ends: &[usize], forward: bool, np: usize) -> Option<usize> {
        let doms = if forward { &self.from_source } else { &self.from_sink };
        let chain = |p: usize| doms.dominators(NodeIndex::new(p)).map(|it| it.map(|n| n.index()));
        let others: Vec<BTreeSet<usize>> = ends[1..].iter().map(|&e| chain(e).map(|c| c.collect())).collect::<Option<_>>()?;
        let found = chain(ends[0])?.find(|&d| d < np && others.iter().all(|c| c.contains(&d)));
        found
    }
}

/// Transitions on paths from the nearest common (post-)dominator place of
/// `ends` to each of them, never passing the dominator again. `None` for
/// fewer than two ends.
fn dominated_paths(wf: &WorkflowNet, dom: &Dominance, ends: &[usize], forward: bool) -> Option<FixedBitSet> {
    if ends.len() < 2 {
        return None;
    }
    let net = wf.net();
    let d = dom.common(ends, forward, net.place_count())?;
    let (_, from) = sweep(net, d, d, forward);
    let mut acc = FixedBitSet::with_capacity(net.transition_count());
    for &e in ends.iter().filter(|&&e| e != d) {
        let (_, mut to) = sweep(net, e, d, !forward);
        to.intersect_with(&from);
        acc.union_with(&to);
    }
    Some(acc)
}

/// Places and transitions reachable from place `start` without entering
/// place `avoid` (which is still left when it is the start).
fn sweep(net: &PetriNet, start: usize, avoid: usize, forward: bool) -> (FixedBitSet, FixedBitSet) {
    let mut seen_p = FixedBitSet::with_capacity(net.place_count());
    let mut seen_t = FixedBitSet::with_capacity(net.transition_count());
    seen_p.insert(start);
    seen_p.insert(avoid);
    let mut stack = vec![start];
    while let Some(q) = stack.pop() {
        let next_t = if forward { net.place_post(q) } else { net.place_pre(q) };
        for &t in next_t {
            if seen_t.put(t) {
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
    if start != avoid {
        seen_p.set(avoid, false);
    }
    (seen_p, seen_t)
}

/// Parts without exactly one entry point or exactly one exit point; empty
/// when `g` is concurrency-hiding.
pub fn is_concurrency_hiding(wf: &WorkflowNet, g: &TransitionPartition) -> Result<Vec<Violation>, DecomposeError> {
    let net = wf.net();
    let mut out = Vec::new();
    for (part, mask) in part_masks(net, g)?.iter().enumerate() {
        let entries = wf.entry_mask(mask);
        if entries.len() != 1 {
            out.push(Violation::EntryCount { part, places: net.place_ids(&entries) });
        }
        let exits = wf.exit_mask(mask);
        if exits.len() != 1 {
            out.push(Violation::ExitCount { part, places: net.place_ids(&exits) });
        }
    }
    Ok(out)
}

/// The sub-net of `part` with its unique entry and exit point as start and
/// end place, normalized.
pub fn cg_project(wf: &WorkflowNet, part: &BTreeSet<NodeId>, ids: &IdSource) -> Result<WorkflowNet, DecomposeError> {
    let net = wf.net();
    let mask = net.transition_mask(part)?;
    let (entries, exits) = (wf.entry_mask(&mask), wf.exit_mask(&mask));
    let ([p_s], [p_e]) = (entries.as_slice(), exits.as_slice()) else {
        return Err(DecomposeError::AmbiguousInterface {
            entries: net.place_ids(&entries),
            exits: net.place_ids(&exits),
        });
    };
    let places: Vec<NodeId> = net.project_places_mask(&mask).into_iter().map(|p| net.place_id(p).clone()).collect();
    let arcs = inner_arcs(net, &mask);
    let sub = PetriNet::from_parts(places, sub_transitions(net, &mask), arcs)?;
    normalize(sub, net.place_id(*p_s), net.place_id(*p_e), ids)
}

fn inner_arcs(net: &PetriNet, mask: &FixedBitSet) -> Vec<(NodeId, NodeId)> {
    let mut arcs = Vec::new();
    for t in mask.ones() {
        let tid = net.transition_id(t);
        arcs.extend(net.transition_pre(t).iter().map(|&p| (net.place_id(p).clone(), tid.clone())));
        arcs.extend(net.transition_post(t).iter().map(|&p| (tid.clone(), net.place_id(p).clone())));
    }
    arcs
}

/// Choice graph over the parts of `g`: `i -> j` when an exit point of part
/// `i` is an entry point of part `j`, start edges into parts entered at the
/// source and end edges out of parts left at the sink.
pub fn execution_flow(wf: &WorkflowNet, g: &TransitionPartition) -> Result<ChoiceGraphStruct, DecomposeError> {
    let net = wf.net();
    let masks = part_masks(net, g)?;
    let mut entry_of: Vec<Vec<usize>> = vec![Vec::new(); net.place_count()];
    let mut edges = Vec::new();
    for (j, m) in masks.iter().enumerate() {
        for p in wf.entry_mask(m) {
            entry_of[p].push(j);
            if p == wf.source() {
                edges.push((CgNode::Start, CgNode::Child(j)));
            }
        }
    }
    for (i, m) in masks.iter().enumerate() {
        for p in wf.exit_mask(m) {
            if p == wf.sink() {
                edges.push((CgNode::Child(i), CgNode::End));
            }
            edges.extend(entry_of[p].iter().map(|&j| (CgNode::Child(i), CgNode::Child(j))));
        }
    }
    ChoiceGraphStruct::new(masks.len(), edges).map_err(DecomposeError::InvalidFlowGraph)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use crate::behavior::test_util::wf;
    use crate::behavior::{check_safe, check_sound, SafetyVerdict};
    use crate::net::test_nets::ids;
    use crate::powl::StructError;
    use proptest::prelude::*;

    fn parts(g: &TransitionPartition) -> Vec<Vec<&str>> {
        g.parts().iter().map(|p| p.iter().map(NodeId::as_str).collect()).collect()
    }

    fn partition(xs: &[&[&str]]) -> TransitionPartition {
        TransitionPartition::new(xs.iter().map(|p| ids(p))).unwrap()
    }

    fn edges(g: &ChoiceGraphStruct) -> BTreeSet<(String, String)> {
        let name = |x: CgNode| match x {
            CgNode::Start => "start".to_string(),
            CgNode::End => "end".to_string(),
            CgNode::Child(i) => i.to_string(),
        };
        g.edges().iter().map(|&(a, b)| (name(a), name(b))).collect()
    }

    fn edge_set(xs: &[(&str, &str)]) -> BTreeSet<(String, String)> {
        xs.iter().map(|&(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn and_block_collapses() {
        assert_eq!(parts(&cg_partition(&and_block())), vec![vec!["a", "b", "c", "d"]]);
    }

    #[test]
    fn state_machines_stay_singletons() {
        assert_eq!(parts(&cg_partition(&xor_block())).len(), 4);
        assert_eq!(parts(&cg_partition(&loop_net())).len(), 4);
        assert_eq!(parts(&cg_partition(&sequence())).len(), 3);
    }

    #[test]
    fn nested_concurrency_inside_choice() {
        // a; ((b || c) | d); e
        let n = wf(&[
            ("i", "a"),
            ("a", "p1"),
            ("p1", "s"),
            ("s", "p2"),
            ("s", "p3"),
            ("p2", "b"),
            ("p3", "c"),
            ("b", "p4"),
            ("c", "p5"),
            ("p4", "j"),
            ("p5", "j"),
            ("j", "p6"),
            ("p1", "d"),
            ("d", "p6"),
            ("p6", "e"),
            ("e", "o"),
        ]);
        let g = cg_partition(&n);
        assert_eq!(parts(&g), vec![vec!["a"], vec!["b", "c", "j", "s"], vec!["d"], vec!["e"]]);
        assert_eq!(is_concurrency_hiding(&n, &g).unwrap(), vec![]);
        let flow = execution_flow(&n, &g).unwrap();
        assert_eq!(
            edges(&flow),
            edge_set(&[("start", "0"), ("0", "1"), ("0", "2"), ("1", "3"), ("2", "3"), ("3", "end")])
        );
    }

    #[test]
    fn concurrency_hiding_counts_interfaces() {
        let n = xor_block();
        let singles = partition(&[&["a"], &["b"], &["c"], &["d"]]);
        assert_eq!(is_concurrency_hiding(&n, &singles).unwrap(), vec![]);
        let n = and_block();
        let g = partition(&[&["a"], &["b", "c"], &["d"]]);
        let v = is_concurrency_hiding(&n, &g).unwrap();
        assert_eq!(
            v,
            vec![
                Violation::ExitCount { part: 0, places: ids(&["p1", "p2"]) },
                Violation::EntryCount { part: 1, places: ids(&["p1", "p2"]) },
                Violation::ExitCount { part: 1, places: ids(&["p3", "p4"]) },
                Violation::EntryCount { part: 2, places: ids(&["p3", "p4"]) },
            ]
        );
    }

    #[test]
    fn project_loop_body() {
        let n = loop_net();
        let src = IdSource::above(n.net());
        let body = cg_project(&n, &ids(&["b", "c"]), &src).unwrap();
        // p1 is re-entered by c and p2 is left through c: one silent each.
        let net = body.net();
        assert_eq!((net.place_count(), net.transition_count(), net.arc_count()), (4, 4, 8));
        assert_eq!(check_safe(&body, 1000), SafetyVerdict::Safe);
        assert!(check_sound(&body, 1000).is_sound());
    }

    #[test]
    fn project_clean_chain_is_unchanged() {
        let n = sequence();
        let src = IdSource::above(n.net());
        let got = cg_project(&n, &ids(&["b"]), &src).unwrap();
        assert!(got.net().isomorphic(wf(&[("p1", "b"), ("b", "p2")]).net()));
        assert_eq!(got.source_id().as_str(), "p1");
    }

    #[test]
    fn project_needs_unique_interface() {
        let n = and_block();
        let src = IdSource::above(n.net());
        assert!(matches!(cg_project(&n, &ids(&["b", "c"]), &src), Err(DecomposeError::AmbiguousInterface { .. })));
    }

    #[test]
    fn flow_of_xor_block() {
        let n = xor_block();
        let g = cg_partition(&n);
        let flow = execution_flow(&n, &g).unwrap();
        assert_eq!(
            edges(&flow),
            edge_set(&[("start", "0"), ("0", "1"), ("0", "2"), ("1", "3"), ("2", "3"), ("3", "end")])
        );
    }

    #[test]
    fn flow_of_loop_has_back_edge() {
        let n = loop_net();
        let g = cg_partition(&n);
        assert_eq!(parts(&g), vec![vec!["a"], vec!["b"], vec!["c"], vec!["e"]]);
        let flow = execution_flow(&n, &g).unwrap();
        assert_eq!(
            edges(&flow),
            edge_set(&[("start", "0"), ("0", "1"), ("1", "2"), ("2", "1"), ("1", "3"), ("3", "end")])
        );
        assert!(flow.is_cyclic());
    }

    #[test]
    fn flow_of_sequence_is_linear() {
        let n = sequence();
        let flow = execution_flow(&n, &cg_partition(&n)).unwrap();
        assert_eq!(edges(&flow), edge_set(&[("start", "0"), ("0", "1"), ("1", "2"), ("2", "end")]));
    }

    #[test]
    fn single_part_is_not_a_flow() {
        let n = and_block();
        assert_eq!(
            execution_flow(&n, &cg_partition(&n)),
            Err(DecomposeError::InvalidFlowGraph(StructError::TooFewChildren(1)))
        );
    }

    proptest! {
        #[test]
        fn partition_independent_of_identifiers(perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
            // a; (b || c); d; (e | f) with names permuted
            let base = ["a", "b", "c", "d", "e", "f"];
            let names: Vec<String> = base.iter().zip(perm).map(|(b, k)| format!("t{k}{b}")).collect();
            let nm = |s: &str| names[base.iter().position(|b| *b == s).unwrap()].as_str();
            let n = wf(&[
                ("i", nm("a")), (nm("a"), "p1"), (nm("a"), "p2"), ("p1", nm("b")), ("p2", nm("c")),
                (nm("b"), "p3"), (nm("c"), "p4"), ("p3", nm("d")), ("p4", nm("d")), (nm("d"), "p5"),
                ("p5", nm("e")), ("p5", nm("f")), (nm("e"), "o"), (nm("f"), "o"),
            ]);
            let mut got: Vec<BTreeSet<char>> = cg_partition(&n).parts().iter()
                .map(|p| p.iter().map(|t| t.as_str().chars().last().unwrap()).collect())
                .collect();
            got.sort();
            let want: Vec<BTreeSet<char>> = vec![['a', 'b', 'c', 'd'].into(), ['e'].into(), ['f'].into()];
            prop_assert_eq!(got, want);
        }
    }
}
