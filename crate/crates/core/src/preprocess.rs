//! Reduction rules applied before conversion. Each rule keeps the language,
//! safeness and soundness of the net.

use std::collections::{BTreeMap, BTreeSet};

use crate::net::{IdSource, Label, NodeId, PetriNet, WorkflowNet};

/// A rewrite of a workflow net.
pub trait ReductionRule {
    /// Name used on the command line.
    fn name(&self) -> &'static str;
    /// The rewritten net, or `None` when the rule does not apply.
    fn apply(&self, wf: &WorkflowNet, ids: &IdSource) -> Option<WorkflowNet>;
}

pub struct DuplicatePlaces;
pub struct XorSplitPlaces;
pub struct XorJoinPlaces;

impl ReductionRule for DuplicatePlaces {
    fn name(&self) -> &'static str {
        "dup"
    }
    fn apply(&self, wf: &WorkflowNet, _ids: &IdSource) -> Option<WorkflowNet> {
        let (out, changed) = remove_duplicate_places(wf);
        changed.then_some(out)
    }
}

impl ReductionRule for XorSplitPlaces {
    fn name(&self) -> &'static str {
        "split"
    }
    fn apply(&self, wf: &WorkflowNet, ids: &IdSource) -> Option<WorkflowNet> {
        let (out, changed) = introduce_xor_split_places(wf, ids);
        changed.then_some(out)
    }
}

impl ReductionRule for XorJoinPlaces {
    fn name(&self) -> &'static str {
        "join"
    }
    fn apply(&self, wf: &WorkflowNet, ids: &IdSource) -> Option<WorkflowNet> {
        let (out, changed) = introduce_xor_join_places(wf, ids);
        changed.then_some(out)
    }
}

/// All rules in their application order.
pub fn all_rules() -> Vec<Box<dyn ReductionRule>> {
    vec![Box::new(DuplicatePlaces), Box::new(XorSplitPlaces), Box::new(XorJoinPlaces)]
}

/// Looks up a rule by its name.
pub fn rule(name: &str) -> Option<Box<dyn ReductionRule>> {
    all_rules().into_iter().find(|r| r.name() == name)
}

/// Result of [`preprocess`].
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub net: WorkflowNet,
    /// Rule names in the order they changed the net.
    pub applied: Vec<&'static str>,
    /// True if the pass cap was hit before a fixpoint.
    pub capped: bool,
}

/// Applies `rules` round-robin until a full pass changes nothing, or until
/// `|P| + |T|` passes have run.
pub fn preprocess(wf: &WorkflowNet, rules: &[Box<dyn ReductionRule>], ids: &IdSource) -> Preprocessed {
    ids.reserve(wf.net());
    let cap = wf.net().place_count() + wf.net().transition_count();
    let mut net = wf.clone();
    let mut applied = Vec::new();
    for _ in 0..cap {
        let mut changed = false;
        for r in rules {
            if let Some(next) = r.apply(&net, ids) {
                net = next;
                applied.push(r.name());
                changed = true;
            }
        }
        if !changed {
            return Preprocessed { net, applied, capped: false };
        }
    }
    Preprocessed { net, applied, capped: true }
}

/// Editable copy of a net.
struct Draft {
    places: BTreeSet<NodeId>,
    transitions: BTreeMap<NodeId, Label>,
    arcs: BTreeSet<(NodeId, NodeId)>,
}

impl Draft {
    fn of(net: &PetriNet) -> Self {
        Draft {
            places: net.places().iter().cloned().collect(),
            transitions: net.transitions().iter().cloned().zip(net.labels().iter().cloned()).collect(),
            arcs: net.arcs().collect(),
        }
    }

    fn remove_place(&mut self, p: &NodeId) {
        self.places.remove(p);
        self.arcs.retain(|(a, b)| a != p && b != p);
    }

    fn finish(self) -> WorkflowNet {
        let net = PetriNet::from_parts(self.places, self.transitions, self.arcs).expect("rewrite keeps ids consistent");
        WorkflowNet::validate(net).expect("rewrite keeps a workflow net")
    }
}

fn neighbours(net: &PetriNet, idx: &[usize]) -> BTreeSet<NodeId> {
    net.transition_ids(idx)
}

/// Deletes all but the smallest place of every group with identical pre-set
/// and post-set. The source and sink are never deleted.
pub fn remove_duplicate_places(wf: &WorkflowNet) -> (WorkflowNet, bool) {
    let net = wf.net();
    let mut groups: BTreeMap<(BTreeSet<NodeId>, BTreeSet<NodeId>), Vec<usize>> = BTreeMap::new();
    for p in 0..net.place_count() {
        let key = (neighbours(net, net.place_pre(p)), neighbours(net, net.place_post(p)));
        groups.entry(key).or_default().push(p);
    }
    let mut draft = Draft::of(net);
    let mut changed = false;
    for mut group in groups.into_values().filter(|g| g.len() > 1) {
        group.sort_by(|&a, &b| net.place_id(a).cmp(net.place_id(b)));
        for &p in &group[1..] {
            if p != wf.source() && p != wf.sink() {
                draft.remove_place(net.place_id(p));
                changed = true;
            }
        }
    }
    if changed {
        (draft.finish(), true)
    } else {
        (wf.clone(), false)
    }
}

/// Makes implicit XOR-splits explicit. For a bundle `Q` of places that are
/// always marked together (same producers), consumed in full by some
/// transitions and only in part by others, the producers mark one fresh place
/// instead; full consumers take it directly and a silent transition turns it
/// back into `Q` for the partial consumers.
pub fn introduce_xor_split_places(wf: &WorkflowNet, ids: &IdSource) -> (WorkflowNet, bool) {
    bundle_rewrite(wf, ids, true)
}

/// Mirror of [`introduce_xor_split_places`] for bundles with the same
/// consumers that are produced in full by some transitions and in part by
/// others.
pub fn introduce_xor_join_places(wf: &WorkflowNet, ids: &IdSource) -> (WorkflowNet, bool) {
    bundle_rewrite(wf, ids, false)
}

fn bundle_rewrite(wf: &WorkflowNet, ids: &IdSource, split: bool) -> (WorkflowNet, bool) {
    ids.reserve(wf.net());
    let mut cur = wf.clone();
    let mut changed = false;
    // Each rewrite removes the bundle's full consumers (producers), so a
    // bundle is never rewritten twice and the loop ends.
    while let Some(next) = rewrite_one_bundle(&cur, ids, split) {
        cur = next;
        changed = true;
    }
    (cur, changed)
}

fn rewrite_one_bundle(wf: &WorkflowNet, ids: &IdSource, split: bool) -> Option<WorkflowNet> {
    let net = wf.net();
    // `shared` is the side all bundle members agree on, `open` the side
    // where full and partial users are told apart.
    let (shared, open) = if split {
        (PetriNet::place_pre as fn(&PetriNet, usize) -> &[usize], PetriNet::place_post as fn(&PetriNet, usize) -> &[usize])
    } else {
        (PetriNet::place_post as fn(&PetriNet, usize) -> &[usize], PetriNet::place_pre as fn(&PetriNet, usize) -> &[usize])
    };
    let mut bundles: BTreeMap<BTreeSet<NodeId>, BTreeSet<NodeId>> = BTreeMap::new();
    for p in 0..net.place_count() {
        if !shared(net, p).is_empty() {
            bundles.entry(neighbours(net, shared(net, p))).or_default().insert(net.place_id(p).clone());
        }
    }
    for q in bundles.into_values().filter(|q| q.len() > 1) {
        // How many members of q each transition uses on the open side.
        let mut uses: BTreeMap<NodeId, usize> = BTreeMap::new();
        for p in &q {
            let pi = net.place_index(p).expect("own place");
            for t in neighbours(net, open(net, pi)) {
                *uses.entry(t).or_default() += 1;
            }
        }
        let full: Vec<NodeId> = uses.iter().filter(|(_, &k)| k == q.len()).map(|(t, _)| t.clone()).collect();
        if full.is_empty() || full.len() == uses.len() {
            continue;
        }
        let p_new = ids.place();
        let tau = ids.transition();
        let mut draft = Draft::of(net);
        let producers_or_consumers = {
            let p0 = net.place_index(q.first().expect("bundle")).expect("own place");
            neighbours(net, shared(net, p0))
        };
        draft.places.insert(p_new.clone());
        draft.transitions.insert(tau.clone(), Label::Silent);
        let link = |from: &NodeId, to: &NodeId| if split { (from.clone(), to.clone()) } else { (to.clone(), from.clone()) };
        for p in &q {
            for t in &producers_or_consumers {
                draft.arcs.remove(&link(t, p));
            }
            for t in &full {
                draft.arcs.remove(&link(p, t));
            }
        }
        for t in &producers_or_consumers {
            draft.arcs.insert(link(t, &p_new));
        }
        for t in &full {
            draft.arcs.insert(link(&p_new, t));
        }
        draft.arcs.insert(link(&p_new, &tau));
        for p in &q {
            draft.arcs.insert(link(&tau, p));
        }
        return Some(draft.finish());
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::test_util::wf;
    use crate::behavior::{bounded_equal, check_safe, check_sound, enumerate_language, SafetyVerdict};
    use crate::powl::{powl_to_net, ChoiceGraphStruct, CgNode, OrderStruct, PowlNode};
    use proptest::prelude::*;

    /// Choice between d and b || c, encoded without explicit XOR places.
    fn choice_or_concurrent() -> WorkflowNet {
        wf(&[
            ("p1", "a"),
            ("a", "p2"),
            ("a", "p3"),
            ("p2", "b"),
            ("p3", "c"),
            ("b", "p4"),
            ("c", "p5"),
            ("p2", "d"),
            ("p3", "d"),
            ("d", "p4"),
            ("d", "p5"),
            ("p4", "e"),
            ("p5", "e"),
            ("e", "p6"),
        ])
    }

    fn assert_preserved(before: &WorkflowNet, after: &WorkflowNet, bound: usize) {
        assert_eq!(check_safe(after, 100_000), SafetyVerdict::Safe);
        assert!(check_sound(after, 100_000).is_sound());
        let l0 = enumerate_language(before, bound, 100_000).unwrap();
        let l1 = enumerate_language(after, bound, 100_000).unwrap();
        let eq = bounded_equal(&l0, &l1);
        assert!(eq.is_equal(), "{:?}", eq.witness);
    }

    #[test]
    fn duplicate_place_removed() {
        let n = wf(&[("i", "a"), ("a", "p1"), ("a", "p2"), ("p1", "b"), ("p2", "b"), ("b", "o")]);
        let (out, changed) = remove_duplicate_places(&n);
        assert!(changed);
        assert_eq!(out.net().places().len(), 3);
        assert!(out.net().contains(&"p1".into()) && !out.net().contains(&"p2".into()));
        assert_preserved(&n, &out, 8);
    }

    #[test]
    fn no_duplicates_no_change() {
        let n = wf(&[("i", "a"), ("a", "p1"), ("p1", "b"), ("b", "o")]);
        let (out, changed) = remove_duplicate_places(&n);
        assert!(!changed);
        assert_eq!(out.net().arc_count(), n.net().arc_count());
    }

    #[test]
    fn split_and_join_rescue_choice_or_concurrent() {
        let n = choice_or_concurrent();
        let ids = IdSource::above(n.net());
        let (s, changed) = introduce_xor_split_places(&n, &ids);
        assert!(changed);
        assert_preserved(&n, &s, 8);
        // d now consumes only the fresh split place.
        assert_eq!(s.net().preset(&"d".into()).unwrap().len(), 1);
        let (j, changed) = introduce_xor_join_places(&s, &ids);
        assert!(changed);
        assert_preserved(&n, &j, 8);
        assert_eq!(j.net().postset(&"d".into()).unwrap().len(), 1);
        assert_eq!(j.net().preset(&"e".into()).unwrap().len(), 1);
    }

    #[test]
    fn bundle_rules_skip_plain_concurrency() {
        let n = wf(&[("i", "a"), ("a", "p1"), ("a", "p2"), ("p1", "b"), ("p2", "c"), ("b", "p3"), ("c", "p4"), ("p3", "d"), ("p4", "d"), ("d", "o")]);
        let ids = IdSource::above(n.net());
        assert!(!introduce_xor_split_places(&n, &ids).1);
        assert!(!introduce_xor_join_places(&n, &ids).1);
        let out = preprocess(&n, &all_rules(), &ids);
        assert!(out.applied.is_empty() && !out.capped);
    }

    #[test]
    fn preprocess_reaches_fixpoint_and_is_idempotent() {
        let n = choice_or_concurrent();
        let ids = IdSource::new();
        let once = preprocess(&n, &all_rules(), &ids);
        assert_eq!(once.applied, vec!["split", "join"]);
        assert_preserved(&n, &once.net, 8);
        let twice = preprocess(&once.net, &all_rules(), &ids);
        assert!(twice.applied.is_empty());
        assert!(twice.net.net().isomorphic(once.net.net()));
    }

    #[test]
    fn registry_lookup() {
        let names: Vec<&str> = all_rules().iter().map(|r| r.name()).collect();
        assert_eq!(names, ["dup", "split", "join"]);
        assert!(rule("join").is_some());
        assert!(rule("murata").is_none());
    }

    fn leaf(a: &str) -> PowlNode {
        PowlNode::leaf(a, Label::visible(a))
    }

    /// Duplicates every internal place of a net built from a small model.
    fn with_duplicates(model: &PowlNode) -> WorkflowNet {
        let base = powl_to_net(model).unwrap();
        let net = base.net();
        let mut d = Draft::of(net);
        for p in 0..net.place_count() {
            if p == base.source() || p == base.sink() {
                continue;
            }
            let copy: NodeId = format!("{}dup", net.place_id(p)).into();
            d.places.insert(copy.clone());
            for &t in net.place_pre(p) {
                d.arcs.insert((net.transition_id(t).clone(), copy.clone()));
            }
            for &t in net.place_post(p) {
                d.arcs.insert((copy.clone(), net.transition_id(t).clone()));
            }
        }
        d.finish()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn rules_preserve_behaviour(shape in 0usize..4, total in any::<bool>()) {
            let order = if total { OrderStruct::total(3).unwrap() } else { OrderStruct::new(3, [(0, 2)]).unwrap() };
            let xor = ChoiceGraphStruct::new(2, [
                (CgNode::Start, CgNode::Child(0)), (CgNode::Start, CgNode::Child(1)),
                (CgNode::Child(0), CgNode::End), (CgNode::Child(1), CgNode::End),
                (CgNode::Child(1), CgNode::Child(0)),
            ]).unwrap();
            let inner = match shape {
                0 => leaf("b"),
                1 => PowlNode::choice_graph(xor.clone(), vec![leaf("b"), leaf("x")]),
                2 => PowlNode::partial_order(OrderStruct::unordered(2).unwrap(), vec![leaf("b"), leaf("x")]),
                _ => PowlNode::choice_graph(xor, vec![
                    PowlNode::partial_order(OrderStruct::unordered(2).unwrap(), vec![leaf("b"), leaf("x")]),
                    leaf("y"),
                ]),
            };
            let model = PowlNode::partial_order(order, vec![leaf("a"), inner, leaf("c")]);
            let n = with_duplicates(&model);
            let out = preprocess(&n, &all_rules(), &IdSource::new());
            prop_assert!(!out.capped);
            assert_preserved(&n, &out.net, 8);
            prop_assert!(out.net.net().place_count() < n.net().place_count());
        }
    }
}
