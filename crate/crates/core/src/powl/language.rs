use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use thiserror::Error;

use crate::behavior::{Trace, TraceSet};

use super::{CgNode, ChoiceGraphStruct, OrderStruct, PowlNode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("language exceeds {limit} traces")]
pub struct TooManyTraces {
    pub limit: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{given} sequences for an order over {expected} children")]
pub struct ArityMismatch {
    pub given: usize,
    pub expected: usize,
}

/// All interleavings of `seqs` that keep each sequence in order and place every
/// element of sequence `i` before every element of sequence `j` when `i < j`
/// in `order`.
pub fn shuffle<T: Clone + Ord>(seqs: &[Vec<T>], order: &OrderStruct) -> Result<BTreeSet<Vec<T>>, ArityMismatch> {
    if seqs.len() != order.child_count() {
        return Err(ArityMismatch { given: seqs.len(), expected: order.child_count() });
    }
    let preds: Vec<Vec<usize>> = (0..seqs.len()).map(|j| order.predecessors(j).collect()).collect();
    let total: usize = seqs.iter().map(Vec::len).sum();
    let mut out = BTreeSet::new();
    let mut pos = vec![0; seqs.len()];
    let mut cur = Vec::with_capacity(total);
    interleave(seqs, &preds, &mut pos, &mut cur, total, &mut out);
    Ok(out)
}

fn interleave<T: Clone + Ord>(
    seqs: &[Vec<T>],
    preds: &[Vec<usize>],
    pos: &mut [usize],
    cur: &mut Vec<T>,
    total: usize,
    out: &mut BTreeSet<Vec<T>>,
) {
    if cur.len() == total {
        out.insert(cur.clone());
        return;
    }
    for j in 0..seqs.len() {
        if pos[j] == seqs[j].len() || preds[j].iter().any(|&i| pos[i] < seqs[i].len()) {
            continue;
        }
        cur.push(seqs[j][pos[j]].clone());
        pos[j] += 1;
        interleave(seqs, preds, pos, cur, total, out);
        pos[j] -= 1;
        cur.pop();
    }
}

/// Child index sequences of start-to-end paths with at most `max_len` children.
pub fn paths_bounded(cg: &ChoiceGraphStruct, max_len: usize) -> BTreeSet<Vec<usize>> {
    fn walk(cg: &ChoiceGraphStruct, at: usize, path: &mut Vec<usize>, max_len: usize, out: &mut BTreeSet<Vec<usize>>) {
        for next in cg.successors(CgNode::Child(at)) {
            match next {
                CgNode::End => {
                    out.insert(path.clone());
                }
                CgNode::Child(j) if path.len() < max_len => {
                    path.push(j);
                    walk(cg, j, path, max_len, out);
                    path.pop();
                }
                _ => {}
            }
        }
    }
    let mut out = BTreeSet::new();
    if max_len == 0 {
        return out;
    }
    for first in cg.successors(CgNode::Start) {
        if let CgNode::Child(i) = first {
            let mut path = vec![i];
            walk(cg, i, &mut path, max_len, &mut out);
        }
    }
    out
}

/// Length of the shortest trace of the model.
pub fn min_visible_len(model: &PowlNode) -> usize {
    match model {
        PowlNode::Leaf { label, .. } => usize::from(!label.is_silent()),
        PowlNode::PartialOrder { children, .. } => children.iter().map(min_visible_len).sum(),
        PowlNode::ChoiceGraph { graph, children } => {
            let weight: Vec<usize> = children.iter().map(min_visible_len).collect();
            // Dijkstra from start; a node's weight is paid on entering it.
            let n = children.len();
            let mut dist = vec![usize::MAX; n];
            let mut heap = BinaryHeap::new();
            for s in graph.successors(CgNode::Start) {
                if let CgNode::Child(i) = s {
                    if weight[i] < dist[i] {
                        dist[i] = weight[i];
                        heap.push(Reverse((dist[i], i)));
                    }
                }
            }
            let mut best = usize::MAX;
            while let Some(Reverse((d, i))) = heap.pop() {
                if d > dist[i] {
                    continue;
                }
                for s in graph.successors(CgNode::Child(i)) {
                    match s {
                        CgNode::End => best = best.min(d),
                        CgNode::Child(j) if d + weight[j] < dist[j] => {
                            dist[j] = d + weight[j];
                            heap.push(Reverse((dist[j], j)));
                        }
                        _ => {}
                    }
                }
            }
            best
        }
    }
}

/// The traces of `model` with at most `max_len` visible activities.
pub fn language_bounded(model: &PowlNode, max_len: usize) -> TraceSet {
    language_bounded_capped(model, max_len, usize::MAX).expect("no cap")
}

/// As [`language_bounded`], failing once any intermediate language grows
/// beyond `limit` traces.
pub fn language_bounded_capped(model: &PowlNode, max_len: usize, limit: usize) -> Result<TraceSet, TooManyTraces> {
    let traces = lang(model, max_len, limit)?;
    Ok(TraceSet::from_traces(max_len, traces))
}

fn check(set: &BTreeSet<Trace>, limit: usize) -> Result<(), TooManyTraces> {
    if set.len() > limit {
        Err(TooManyTraces { limit })
    } else {
        Ok(())
    }
}

fn lang(model: &PowlNode, max_len: usize, limit: usize) -> Result<BTreeSet<Trace>, TooManyTraces> {
    match model {
        PowlNode::Leaf { label, .. } => Ok(match label.activity() {
            None => BTreeSet::from([Vec::new()]),
            Some(_) if max_len == 0 => BTreeSet::new(),
            Some(a) => BTreeSet::from([vec![a.clone()]]),
        }),
        PowlNode::PartialOrder { order, children } => {
            let mins: Vec<usize> = children.iter().map(min_visible_len).collect();
            let floor: usize = mins.iter().sum();
            if floor > max_len {
                return Ok(BTreeSet::new());
            }
            let mut langs = Vec::with_capacity(children.len());
            for (c, m) in children.iter().zip(&mins) {
                // Room left for this child once the others take their minimum.
                let l: Vec<Trace> = lang(c, max_len - (floor - m), limit)?.into_iter().collect();
                langs.push(l);
            }
            let mut out = BTreeSet::new();
            let mut pick = Vec::with_capacity(children.len());
            product(&langs, &mins, order, max_len, 0, 0, &mut pick, &mut out, limit)?;
            Ok(out)
        }
        PowlNode::ChoiceGraph { graph, children } => {
            let mut langs = Vec::with_capacity(children.len());
            for c in children {
                langs.push(lang(c, max_len, limit)?);
            }
            // tail[i]: traces of a run that starts child i and ends at the end
            // node. Grows monotonically to the least fixpoint of
            // tail[i] = L_i . (union over successors j of tail[j]), with the
            // end node contributing the empty trace.
            let n = children.len();
            let mut tail: Vec<BTreeSet<Trace>> = vec![BTreeSet::new(); n];
            let succ: Vec<Vec<CgNode>> = (0..n).map(|i| graph.successors(CgNode::Child(i)).collect()).collect();
            let pred: Vec<Vec<usize>> = (0..n)
                .map(|j| {
                    graph
                        .predecessors(CgNode::Child(j))
                        .filter_map(|p| match p {
                            CgNode::Child(i) => Some(i),
                            _ => None,
                        })
                        .collect()
                })
                .collect();
            // Semi-naive: only suffixes found in the previous round are
            // prefixed again.
            let mut delta: Vec<(usize, Vec<Trace>)> = Vec::new();
            for i in 0..n {
                if succ[i].contains(&CgNode::End) {
                    let new: Vec<Trace> = langs[i].iter().filter(|a| a.len() <= max_len).cloned().collect();
                    tail[i].extend(new.iter().cloned());
                    check(&tail[i], limit)?;
                    delta.push((i, new));
                }
            }
            while let Some((j, new)) = delta.pop() {
                for &i in &pred[j] {
                    let mut fresh = Vec::new();
                    for a in &langs[i] {
                        for b in &new {
                            if a.len() + b.len() <= max_len {
                                let mut t = a.clone();
                                t.extend(b.iter().cloned());
                                if tail[i].insert(t.clone()) {
                                    fresh.push(t);
                                }
                            }
                        }
                    }
                    if !fresh.is_empty() {
                        check(&tail[i], limit)?;
                        delta.push((i, fresh));
                    }
                }
            }
            let mut out = BTreeSet::new();
            for s in graph.successors(CgNode::Start) {
                if let CgNode::Child(i) = s {
                    out.extend(tail[i].iter().cloned());
                }
            }
            check(&out, limit)?;
            Ok(out)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn product(
    langs: &[Vec<Trace>],
    mins: &[usize],
    order: &OrderStruct,
    max_len: usize,
    i: usize,
    used: usize,
    pick: &mut Vec<Trace>,
    out: &mut BTreeSet<Trace>,
    limit: usize,
) -> Result<(), TooManyTraces> {
    if i == langs.len() {
        let shuffled = shuffle(pick, order).expect("arity checked by construction");
        out.extend(shuffled);
        return check(out, limit);
    }
    let rest: usize = mins[i + 1..].iter().sum();
    for t in &langs[i] {
        if used + t.len() + rest > max_len {
            continue;
        }
        pick.push(t.clone());
        product(langs, mins, order, max_len, i + 1, used + t.len(), pick, out, limit)?;
        pick.pop();
    }
    Ok(())
}
