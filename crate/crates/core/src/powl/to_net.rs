use std::collections::{BTreeMap, BTreeSet};

use crate::net::{IdSource, Label, NodeId, PetriNet, PetriNetBuilder, WorkflowNet};

use super::{CgNode, PowlError, PowlNode};

/// Builds a safe and sound workflow net with the same language as `model`.
///
/// Partial orders become marked-graph templates and choice graphs become
/// state-machine templates with one placeholder transition per child; each
/// placeholder is then replaced by the child's own net. Leaves keep their
/// transition ids; every other node gets a fresh `p#n` / `t#n` id.
pub fn powl_to_net(model: &PowlNode) -> Result<WorkflowNet, PowlError> {
    model.validate()?;
    let ids = IdSource::new();
    for (id, _) in model.leaves() {
        ids.reserve_id(id);
    }
    Ok(build(model, &ids))
}

fn finish(b: &PetriNetBuilder) -> WorkflowNet {
    let net = b.build().expect("template nodes are fresh");
    WorkflowNet::validate(net).expect("templates are workflow nets")
}

fn build(model: &PowlNode, ids: &IdSource) -> WorkflowNet {
    let (template, slots) = match model {
        PowlNode::Leaf { id, label } => {
            let mut b = PetriNetBuilder::new();
            let (i, o) = (ids.place(), ids.place());
            b.place(i.clone()).place(o.clone()).transition(id.clone(), label.clone());
            b.arc(i, id.clone()).arc(id.clone(), o);
            return finish(&b);
        }
        PowlNode::PartialOrder { order, children } => {
            let mut b = PetriNetBuilder::new();
            let (src, snk) = (ids.place(), ids.place());
            b.place(src.clone()).place(snk.clone());
            let slots: Vec<NodeId> = children.iter().map(|_| ids.transition()).collect();
            for s in &slots {
                b.transition(s.clone(), Label::Silent);
            }
            for (x, y) in order.covering_pairs() {
                let p = ids.place();
                b.place(p.clone()).arc(slots[x].clone(), p.clone()).arc(p, slots[y].clone());
            }
            match order.minimal().as_slice() {
                [m] => {
                    b.arc(src.clone(), slots[*m].clone());
                }
                many => {
                    let open = ids.transition();
                    b.transition(open.clone(), Label::Silent).arc(src.clone(), open.clone());
                    for &m in many {
                        let p = ids.place();
                        b.place(p.clone()).arc(open.clone(), p.clone()).arc(p, slots[m].clone());
                    }
                }
            }
            match order.maximal().as_slice() {
                [m] => {
                    b.arc(slots[*m].clone(), snk.clone());
                }
                many => {
                    let close = ids.transition();
                    b.transition(close.clone(), Label::Silent).arc(close.clone(), snk.clone());
                    for &m in many {
                        let p = ids.place();
                        b.place(p.clone()).arc(slots[m].clone(), p.clone()).arc(p, close.clone());
                    }
                }
            }
            (finish(&b), slots)
        }
        PowlNode::ChoiceGraph { graph, children } => {
            let mut b = PetriNetBuilder::new();
            let (src, snk) = (ids.place(), ids.place());
            b.place(src.clone()).place(snk.clone());
            // A child hands over to the place keyed by its successor set, so
            // children with the same continuation share it.
            let mut junction: BTreeMap<BTreeSet<CgNode>, NodeId> = BTreeMap::new();
            let end_only = BTreeSet::from([CgNode::End]);
            junction.insert(end_only, snk.clone());
            let mut out = Vec::with_capacity(children.len());
            for v in 0..children.len() {
                let succ: BTreeSet<CgNode> = graph.successors(CgNode::Child(v)).collect();
                let place = junction.entry(succ.clone()).or_insert_with(|| {
                    let p = ids.place();
                    b.place(p.clone());
                    if succ.contains(&CgNode::End) {
                        let t = ids.transition();
                        b.transition(t.clone(), Label::Silent).arc(p.clone(), t.clone()).arc(t, snk.clone());
                    }
                    p
                });
                out.push(place.clone());
            }
            let at = |u: CgNode| match u {
                CgNode::Start => src.clone(),
                CgNode::Child(i) => out[i].clone(),
                CgNode::End => unreachable!("end has no successors"),
            };
            let slots: Vec<NodeId> = children.iter().map(|_| ids.transition()).collect();
            for v in 0..children.len() {
                let from: BTreeSet<NodeId> = graph.predecessors(CgNode::Child(v)).map(at).collect();
                let entry = match from.first() {
                    // Consume straight from the shared place unless that would
                    // make the slot a self-loop.
                    Some(only) if from.len() == 1 && *only != out[v] => only.clone(),
                    _ => {
                        let p = ids.place();
                        b.place(p.clone());
                        for j in &from {
                            let t = ids.transition();
                            b.transition(t.clone(), Label::Silent).arc(j.clone(), t.clone()).arc(t, p.clone());
                        }
                        p
                    }
                };
                b.transition(slots[v].clone(), Label::Silent)
                    .arc(entry, slots[v].clone())
                    .arc(slots[v].clone(), out[v].clone());
            }
            (finish(&b), slots)
        }
    };
    let mut net: PetriNet = template.into_net();
    for (child, slot) in model.children().iter().zip(&slots) {
        let sub = build(child, ids);
        net = net.substitute(slot, &sub).expect("ids are fresh");
    }
    WorkflowNet::validate(net).expect("substitution preserves workflow nets")
}
