use std::collections::{HashMap, VecDeque};

use crate::net::{NodeId, PetriNet, WorkflowNet};

use super::{dense_enabled, dense_fire, Marking};

pub const DEFAULT_STATE_BUDGET: usize = 1_000_000;

/// Why exploration stopped early.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Truncation {
    BudgetExceeded { budget: usize },
    /// A reachable marking with two tokens in some place.
    Unsafe { marking: Marking, sequence: Vec<NodeId> },
}

/// Reachable markings of a workflow net from `[source]`, explored breadth first.
/// State 0 is the initial marking.
#[derive(Debug, Clone)]
pub struct ReachabilityGraph {
    states: Vec<Box<[u32]>>,
    index: HashMap<Box<[u32]>, usize>,
    edges: Vec<(usize, usize, usize)>,
    out: Vec<Vec<usize>>,
    parent: Vec<Option<(usize, usize)>>,
    truncated: Option<Truncation>,
}

/// Explores at most `state_budget` markings and stops at the first unsafe one.
pub fn reachability_graph(wf: &WorkflowNet, state_budget: usize) -> ReachabilityGraph {
    let net = wf.net();
    let initial: Box<[u32]> = Box::new([wf.source() as u32]);
    let mut g = ReachabilityGraph {
        states: vec![initial.clone()],
        index: HashMap::from([(initial, 0)]),
        edges: Vec::new(),
        out: vec![Vec::new()],
        parent: vec![None],
        truncated: None,
    };
    let mut queue = VecDeque::from([0usize]);
    'bfs: while let Some(s) = queue.pop_front() {
        let m = g.states[s].clone();
        for t in dense_enabled(net, &m) {
            let next = dense_fire(net, &m, t);
            if next.windows(2).any(|w| w[0] == w[1]) {
                let mut sequence = g.firing_sequence(net, s);
                sequence.push(net.transition_id(t).clone());
                g.truncated = Some(Truncation::Unsafe {
                    marking: Marking::from_dense(net, &next),
                    sequence,
                });
                break 'bfs;
            }
            let next: Box<[u32]> = next.into_boxed_slice();
            let target = match g.index.get(&next) {
                Some(&i) => i,
                None => {
                    if g.states.len() >= state_budget {
                        g.truncated = Some(Truncation::BudgetExceeded { budget: state_budget });
                        break 'bfs;
                    }
                    let i = g.states.len();
                    g.states.push(next.clone());
                    g.index.insert(next, i);
                    g.out.push(Vec::new());
                    g.parent.push(Some((s, t)));
                    queue.push_back(i);
                    i
                }
            };
            g.out[s].push(g.edges.len());
            g.edges.push((s, t, target));
        }
    }
    g
}

/// Fewest visible transitions any run needs to empty place `p` into the sink,
/// per place. A fired transition leaves a token in each output place and all
/// of them must be consumed, hence the maximum over outputs.
pub(crate) fn visible_distance_to_sink(wf: &WorkflowNet) -> Vec<usize> {
    let net = wf.net();
    let mut h = vec![usize::MAX; net.place_count()];
    h[wf.sink()] = 0;
    let mut changed = true;
    while changed {
        changed = false;
        for t in 0..net.transition_count() {
            let after = net.transition_post(t).iter().map(|&q| h[q]).max().unwrap_or(0);
            if after == usize::MAX {
                continue;
            }
            let cost = after + usize::from(!net.label(t).is_silent());
            for &p in net.transition_pre(t) {
                if cost < h[p] {
                    h[p] = cost;
                    changed = true;
                }
            }
        }
    }
    h
}

/// Like [`reachability_graph`], but keeps only the markings and edges that
/// can lie on a run from `[source]` to `[sink]` with at most `max_visible`
/// visible transitions: markings are explored in order of the fewest visible
/// steps needed to reach them and dropped when that count plus a lower bound
/// on the visible steps still needed exceeds `max_visible`.
pub(crate) fn bounded_reachability_graph(wf: &WorkflowNet, max_visible: usize, state_budget: usize) -> ReachabilityGraph {
    let net = wf.net();
    let h = visible_distance_to_sink(wf);
    let rest = |m: &[u32]| m.iter().map(|&p| h[p as usize]).max().unwrap_or(0);
    let initial: Box<[u32]> = Box::new([wf.source() as u32]);
    let mut g = ReachabilityGraph {
        states: vec![initial.clone()],
        index: HashMap::from([(initial.clone(), 0)]),
        edges: Vec::new(),
        out: vec![Vec::new()],
        parent: vec![None],
        truncated: None,
    };
    if rest(&initial) > max_visible {
        return g;
    }
    let mut depth = vec![0usize];
    let mut done = vec![false];
    let mut queue = VecDeque::from([0usize]);
    'bfs: while let Some(s) = queue.pop_front() {
        if std::mem::replace(&mut done[s], true) {
            continue;
        }
        let m = g.states[s].clone();
        for t in dense_enabled(net, &m) {
            let next = dense_fire(net, &m, t);
            if next.windows(2).any(|w| w[0] == w[1]) {
                let mut sequence = g.firing_sequence(net, s);
                sequence.push(net.transition_id(t).clone());
                g.truncated = Some(Truncation::Unsafe {
                    marking: Marking::from_dense(net, &next),
                    sequence,
                });
                break 'bfs;
            }
            let w = usize::from(!net.label(t).is_silent());
            let d = depth[s] + w;
            if d + rest(&next) > max_visible {
                continue;
            }
            let next: Box<[u32]> = next.into_boxed_slice();
            let target = match g.index.get(&next) {
                Some(&i) => {
                    if d < depth[i] {
                        depth[i] = d;
                        g.parent[i] = Some((s, t));
                        if w == 0 { queue.push_front(i) } else { queue.push_back(i) }
                    }
                    i
                }
                None => {
                    if g.states.len() >= state_budget {
                        g.truncated = Some(Truncation::BudgetExceeded { budget: state_budget });
                        break 'bfs;
                    }
                    let i = g.states.len();
                    g.states.push(next.clone());
                    g.index.insert(next, i);
                    g.out.push(Vec::new());
                    g.parent.push(Some((s, t)));
                    depth.push(d);
                    done.push(false);
                    if w == 0 { queue.push_front(i) } else { queue.push_back(i) }
                    i
                }
            };
            g.out[s].push(g.edges.len());
            g.edges.push((s, t, target));
        }
    }
    g
}

impl ReachabilityGraph {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn truncated(&self) -> Option<&Truncation> {
        self.truncated.as_ref()
    }

    pub fn is_complete(&self) -> bool {
        self.truncated.is_none()
    }

    pub fn marking(&self, net: &PetriNet, s: usize) -> Marking {
        Marking::from_dense(net, &self.states[s])
    }

    pub fn markings<'a>(&'a self, net: &'a PetriNet) -> impl Iterator<Item = Marking> + 'a {
        (0..self.states.len()).map(move |s| self.marking(net, s))
    }

    pub(crate) fn dense(&self, s: usize) -> &[u32] {
        &self.states[s]
    }

    pub(crate) fn state_of(&self, dense: &[u32]) -> Option<usize> {
        self.index.get(dense).copied()
    }

    /// Edges as (source state, transition index, target state).
    pub fn edges(&self) -> &[(usize, usize, usize)] {
        &self.edges
    }

    pub(crate) fn out_edges(&self, s: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out[s].iter().map(|&e| (self.edges[e].1, self.edges[e].2))
    }

    /// A shortest firing sequence from the initial marking to state `s`.
    pub fn firing_sequence(&self, net: &PetriNet, mut s: usize) -> Vec<NodeId> {
        let mut seq = Vec::new();
        while let Some((prev, t)) = self.parent[s] {
            seq.push(net.transition_id(t).clone());
            s = prev;
        }
        seq.reverse();
        seq
    }

    /// States from which `target` is reachable.
    pub(crate) fn co_reachable(&self, target: usize) -> Vec<bool> {
        let mut back = vec![Vec::new(); self.states.len()];
        for &(a, _, b) in &self.edges {
            back[b].push(a);
        }
        let mut seen = vec![false; self.states.len()];
        let mut stack = vec![target];
        seen[target] = true;
        while let Some(s) = stack.pop() {
            for &a in &back[s] {
                if !seen[a] {
                    seen[a] = true;
                    stack.push(a);
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SafetyVerdict {
    Safe,
    Unsafe { marking: Marking, sequence: Vec<NodeId> },
    Unknown { budget: usize },
}

pub fn check_safe(wf: &WorkflowNet, state_budget: usize) -> SafetyVerdict {
    let g = reachability_graph(wf, state_budget);
    match g.truncated {
        None => SafetyVerdict::Safe,
        Some(Truncation::Unsafe { marking, sequence }) => SafetyVerdict::Unsafe { marking, sequence },
        Some(Truncation::BudgetExceeded { budget }) => SafetyVerdict::Unknown { budget },
    }
}

/// The violated soundness clause with a witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Unsoundness {
    DeadTransition(NodeId),
    /// A reachable marking from which `[sink]` cannot be reached.
    NoOptionToComplete { marking: Marking, sequence: Vec<NodeId> },
    /// A reachable marking that marks the sink alongside other tokens.
    ImproperCompletion { marking: Marking, sequence: Vec<NodeId> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SoundnessVerdict {
    Sound,
    Unsound(Unsoundness),
    /// Exploration was cut short (budget, or an unsafe marking).
    Unknown(Truncation),
}

impl SoundnessVerdict {
    pub fn is_sound(&self) -> bool {
        matches!(self, SoundnessVerdict::Sound)
    }
}

/// Checks the three soundness clauses on the explicit state space: proper
/// completion first, then option to complete, then dead transitions.
pub fn check_sound(wf: &WorkflowNet, state_budget: usize) -> SoundnessVerdict {
    let g = reachability_graph(wf, state_budget);
    if let Some(t) = g.truncated.clone() {
        return SoundnessVerdict::Unknown(t);
    }
    let net = wf.net();
    let sink = wf.sink() as u32;
    for s in 0..g.state_count() {
        let m = g.dense(s);
        if m.contains(&sink) && m.len() > 1 {
            return SoundnessVerdict::Unsound(Unsoundness::ImproperCompletion {
                marking: g.marking(net, s),
                sequence: g.firing_sequence(net, s),
            });
        }
    }
    let Some(final_state) = g.state_of(&[sink]) else {
        return SoundnessVerdict::Unsound(Unsoundness::NoOptionToComplete {
            marking: g.marking(net, 0),
            sequence: Vec::new(),
        });
    };
    let co = g.co_reachable(final_state);
    if let Some(s) = (0..g.state_count()).find(|&s| !co[s]) {
        return SoundnessVerdict::Unsound(Unsoundness::NoOptionToComplete {
            marking: g.marking(net, s),
            sequence: g.firing_sequence(net, s),
        });
    }
    let mut fired = vec![false; net.transition_count()];
    for &(_, t, _) in g.edges() {
        fired[t] = true;
    }
    if let Some(t) = fired.iter().position(|&f| !f) {
        return SoundnessVerdict::Unsound(Unsoundness::DeadTransition(net.transition_id(t).clone()));
    }
    SoundnessVerdict::Sound
}

#[cfg(test)]
mod tests {
    use super::super::test_util::wf;
    use super::*;

    #[test]
    fn visible_distance_takes_the_longest_branch() {
        let n = crate::decompose::fixtures::and_block();
        let h = visible_distance_to_sink(&n);
        let at = |p: &str| h[n.net().place_index(&p.into()).unwrap()];
        assert_eq!((at("i"), at("p1"), at("p3"), at("o")), (3, 2, 1, 0));
    }

    #[test]
    fn bounded_graph_prunes_long_runs() {
        let n = crate::decompose::fixtures::and_block();
        assert_eq!(bounded_reachability_graph(&n, 2, 100).state_count(), 1);
        assert_eq!(bounded_reachability_graph(&n, 3, 100).state_count(), 2);
        let all = reachability_graph(&n, 100);
        let kept = bounded_reachability_graph(&n, 4, 100);
        assert_eq!((kept.state_count(), kept.edge_count()), (all.state_count(), all.edge_count()));
        // a silent self-loop does not count towards the bound
        let looped = wf(&[("i", "a"), ("a", "p"), ("p", "tau1"), ("tau1", "p"), ("p", "b"), ("b", "o")]);
        assert_eq!(bounded_reachability_graph(&looped, 2, 100).state_count(), 3);
    }

    #[test]
    fn base_case_graph() {
        let g = reachability_graph(&wf(&[("i", "a"), ("a", "o")]), 10);
        assert_eq!((g.state_count(), g.edge_count()), (2, 1));
        assert!(g.is_complete());
    }

    #[test]
    fn diamond_has_six_markings() {
        // a;(b||c);d: [i], [p1,p2], [p3,p2], [p1,p4], [p3,p4], [o]
        let n = wf(&[
            ("i", "a"), ("a", "p1"), ("a", "p2"), ("p1", "b"), ("p2", "c"),
            ("b", "p3"), ("c", "p4"), ("p3", "d"), ("p4", "d"), ("d", "o"),
        ]);
        let g = reachability_graph(&n, 100);
        assert_eq!(g.state_count(), 6);
        assert_eq!(g.edge_count(), 6);
        assert_eq!(check_safe(&n, 100), SafetyVerdict::Safe);
        assert_eq!(check_sound(&n, 100), SoundnessVerdict::Sound);
    }

    #[test]
    fn unsafe_loop_is_caught() {
        // b puts a token back into p1 while keeping one in p2, so p2 fills up.
        let n = wf(&[
            ("i", "a"), ("a", "p1"), ("p1", "b"), ("b", "p1"), ("b", "p2"),
            ("p1", "c"), ("c", "p3"), ("p3", "d"), ("p2", "d"), ("d", "o"),
        ]);
        match check_safe(&n, 100) {
            SafetyVerdict::Unsafe { marking, sequence } => {
                assert_eq!(marking.count(&"p2".into()), 2);
                assert_eq!(sequence, vec![NodeId::from("a"), "b".into(), "b".into()]);
            }
            v => panic!("{v:?}"),
        }
        assert!(matches!(
            check_sound(&n, 100),
            SoundnessVerdict::Unknown(Truncation::Unsafe { .. })
        ));
    }

    #[test]
    fn budget_is_reported() {
        let n = wf(&[("i", "a"), ("a", "p1"), ("p1", "b"), ("b", "o")]);
        assert_eq!(check_safe(&n, 2), SafetyVerdict::Unknown { budget: 2 });
        assert_eq!(check_safe(&n, 3), SafetyVerdict::Safe);
    }

    #[test]
    fn dead_transition() {
        // c needs both p1 and p2 but they are alternatives.
        let n = wf(&[
            ("i", "a"), ("i", "b"), ("a", "p1"), ("b", "p2"), ("p1", "x"), ("p2", "y"),
            ("p1", "c"), ("p2", "c"), ("x", "o"), ("y", "o"), ("c", "o"),
        ]);
        assert_eq!(
            check_sound(&n, 100),
            SoundnessVerdict::Unsound(Unsoundness::DeadTransition("c".into()))
        );
    }

    #[test]
    fn stuck_marking() {
        // XOR split joined by an AND join: deadlock.
        let n = wf(&[("i", "a"), ("i", "b"), ("a", "p1"), ("b", "p2"), ("p1", "c"), ("p2", "c"), ("c", "o")]);
        assert!(matches!(
            check_sound(&n, 100),
            SoundnessVerdict::Unsound(Unsoundness::NoOptionToComplete { .. })
        ));
    }

    #[test]
    fn improper_completion() {
        // AND split joined by an XOR join: the sink gets marked early.
        let n = wf(&[("i", "a"), ("a", "p1"), ("a", "p2"), ("p1", "b"), ("p2", "c"), ("b", "o"), ("c", "o")]);
        match check_sound(&n, 100) {
            SoundnessVerdict::Unsound(Unsoundness::ImproperCompletion { marking, .. }) => {
                assert_eq!(marking.count(&"o".into()), 1);
            }
            SoundnessVerdict::Unknown(Truncation::Unsafe { .. }) => {}
            v => panic!("{v:?}"),
        }
    }
}
