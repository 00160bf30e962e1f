use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::net::WorkflowNet;

use super::reach::{bounded_reachability_graph, Truncation};
use super::Marking;

/// A sequence of visible activities.
pub type Trace = Vec<Arc<str>>;

/// Finite set of traces, each at most `bound` long.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceSet {
    traces: BTreeSet<Trace>,
    bound: usize,
}

impl TraceSet {
    pub fn new(bound: usize) -> Self {
        TraceSet { traces: BTreeSet::new(), bound }
    }

    pub fn from_traces(bound: usize, traces: impl IntoIterator<Item = Trace>) -> Self {
        let mut set = TraceSet::new(bound);
        for t in traces {
            set.insert(t);
        }
        set
    }

    /// Convenience constructor from string slices.
    pub fn from_strs(bound: usize, traces: &[&[&str]]) -> Self {
        Self::from_traces(
            bound,
            traces.iter().map(|t| t.iter().map(|&a| Arc::from(a)).collect()),
        )
    }

    /// Inserts `t`; traces longer than the bound are ignored.
    pub fn insert(&mut self, t: Trace) -> bool {
        t.len() <= self.bound && self.traces.insert(t)
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn contains(&self, t: &[Arc<str>]) -> bool {
        self.traces.contains(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Trace> {
        self.traces.iter()
    }

    /// The traces of length at most `bound` (which must not exceed the current one).
    pub fn restrict(&self, bound: usize) -> TraceSet {
        let bound = bound.min(self.bound);
        TraceSet {
            traces: self.traces.iter().filter(|t| t.len() <= bound).cloned().collect(),
            bound,
        }
    }

    pub fn is_subset(&self, other: &TraceSet) -> bool {
        self.traces.is_subset(&other.traces)
    }
}

pub fn format_trace(t: &[Arc<str>]) -> String {
    let inner: Vec<&str> = t.iter().map(|a| a.as_ref()).collect();
    format!("⟨{}⟩", inner.join(","))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Result of comparing two trace sets at their common bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedEq {
    pub bound: usize,
    /// The smallest trace found in only one of the two sets, and which one.
    pub witness: Option<(Trace, Side)>,
}

impl BoundedEq {
    pub fn is_equal(&self) -> bool {
        self.witness.is_none()
    }
}

pub fn bounded_equal(a: &TraceSet, b: &TraceSet) -> BoundedEq {
    let bound = a.bound.min(b.bound);
    let (a, b) = (a.restrict(bound), b.restrict(bound));
    let left = a.traces.difference(&b.traces).next();
    let right = b.traces.difference(&a.traces).next();
    let witness = match (left, right) {
        (Some(l), Some(r)) if r < l => Some((r.clone(), Side::Right)),
        (Some(l), _) => Some((l.clone(), Side::Left)),
        (None, Some(r)) => Some((r.clone(), Side::Right)),
        (None, None) => None,
    };
    BoundedEq { bound, witness }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LanguageError {
    #[error("state space exceeds {budget} markings")]
    BudgetExceeded { budget: usize },
    #[error("net is unsafe: {marking} is reachable")]
    Unsafe { marking: Marking },
    #[error("more than {limit} traces")]
    TooManyTraces { limit: usize },
}

/// Visible traces of length at most `max_len` of complete runs from
/// `[source]` to `[sink]`.
pub fn enumerate_language(
    wf: &WorkflowNet,
    max_len: usize,
    state_budget: usize,
) -> Result<TraceSet, LanguageError> {
    enumerate_language_capped(wf, max_len, state_budget, usize::MAX)
}

/// As [`enumerate_language`], giving up once more than `max_traces` traces
/// have been found.
///
/// Runs a subset construction over the reachability graph: silent moves are
/// absorbed into closures, so silent cycles cannot make the search diverge,
/// and branches that cannot reach `[sink]` within the remaining length are
/// cut off.
pub fn enumerate_language_capped(
    wf: &WorkflowNet,
    max_len: usize,
    state_budget: usize,
    max_traces: usize,
) -> Result<TraceSet, LanguageError> {
    let net = wf.net();
    let g = bounded_reachability_graph(wf, max_len, state_budget);
    match g.truncated() {
        Some(Truncation::BudgetExceeded { budget }) => {
            return Err(LanguageError::BudgetExceeded { budget: *budget })
        }
        Some(Truncation::Unsafe { marking, .. }) => {
            return Err(LanguageError::Unsafe { marking: marking.clone() })
        }
        None => {}
    }
    let mut out = TraceSet::new(max_len);
    let Some(fin) = g.state_of(&[wf.sink() as u32]) else {
        return Ok(out);
    };

    // Fewest visible steps from each state to the final marking.
    let n = g.state_count();
    let mut back: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &(a, t, b) in g.edges() {
        back[b].push((a, usize::from(!net.label(t).is_silent())));
    }
    let mut dist = vec![usize::MAX; n];
    dist[fin] = 0;
    let mut dq = VecDeque::from([fin]);
    while let Some(s) = dq.pop_front() {
        for &(a, w) in &back[s] {
            if dist[s] + w < dist[a] {
                dist[a] = dist[s] + w;
                if w == 0 {
                    dq.push_front(a);
                } else {
                    dq.push_back(a);
                }
            }
        }
    }

    let closure = |seed: Vec<usize>| -> Vec<usize> {
        let mut seen: BTreeSet<usize> = seed.iter().copied().collect();
        let mut stack = seed;
        while let Some(s) = stack.pop() {
            for (t, s2) in g.out_edges(s) {
                if net.label(t).is_silent() && dist[s2] != usize::MAX && seen.insert(s2) {
                    stack.push(s2);
                }
            }
        }
        seen.into_iter().collect()
    };

    struct Dfa {
        sets: Vec<Vec<usize>>,
        ids: HashMap<Vec<usize>, usize>,
        step: Vec<Option<Vec<(Arc<str>, usize)>>>,
        min: Vec<usize>,
        accept: Vec<bool>,
    }
    let mut dfa = Dfa { sets: Vec::new(), ids: HashMap::new(), step: Vec::new(), min: Vec::new(), accept: Vec::new() };
    let intern = |dfa: &mut Dfa, set: Vec<usize>| -> usize {
        if let Some(&i) = dfa.ids.get(&set) {
            return i;
        }
        let i = dfa.sets.len();
        dfa.min.push(set.iter().map(|&s| dist[s]).min().unwrap_or(usize::MAX));
        dfa.accept.push(set.binary_search(&fin).is_ok());
        dfa.ids.insert(set.clone(), i);
        dfa.sets.push(set);
        dfa.step.push(None);
        i
    };
    if dist[0] == usize::MAX {
        return Ok(out);
    }
    let start = closure(vec![0]);
    let start = intern(&mut dfa, start);

    let mut stack: Vec<(usize, Trace)> = vec![(start, Vec::new())];
    while let Some((d, prefix)) = stack.pop() {
        if prefix.len() + dfa.min[d] > max_len {
            continue;
        }
        if dfa.accept[d] {
            out.insert(prefix.clone());
            if out.len() > max_traces {
                return Err(LanguageError::TooManyTraces { limit: max_traces });
            }
        }
        if prefix.len() == max_len {
            continue;
        }
        if dfa.step[d].is_none() {
            let mut by_label: BTreeMap<Arc<str>, BTreeSet<usize>> = BTreeMap::new();
            for &s in &dfa.sets[d] {
                for (t, s2) in g.out_edges(s) {
                    if let Some(a) = net.label(t).activity() {
                        if dist[s2] != usize::MAX {
                            by_label.entry(a.clone()).or_default().insert(s2);
                        }
                    }
                }
            }
            let mut moves = Vec::with_capacity(by_label.len());
            for (a, targets) in by_label {
                let set = closure(targets.into_iter().collect());
                moves.push((a, intern(&mut dfa, set)));
            }
            dfa.step[d] = Some(moves);
        }
        for (a, next) in dfa.step[d].as_ref().expect("filled above").iter().rev() {
            let mut p = prefix.clone();
            p.push(a.clone());
            stack.push((*next, p));
        }
    }
    Ok(out)
}
