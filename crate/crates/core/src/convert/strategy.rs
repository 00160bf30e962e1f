use std::collections::BTreeSet;

use crate::decompose::{self, DecomposeError, Violation};
use crate::net::{IdSource, NodeId, WorkflowNet};
use crate::partition::TransitionPartition;
use crate::powl::PowlNode;

/// One way of splitting a net into parts that are converted independently
/// and then recombined under a single composite node.
pub trait Decomposition {
    /// Registry name.
    fn name(&self) -> &'static str;
    fn partition(&self, wf: &WorkflowNet) -> TransitionPartition;
    /// Broken validity conditions of `g`; empty when it may be used.
    fn violations(&self, wf: &WorkflowNet, g: &TransitionPartition) -> Result<Vec<Violation>, DecomposeError>;
    fn project(&self, wf: &WorkflowNet, part: &BTreeSet<NodeId>, ids: &IdSource) -> Result<WorkflowNet, DecomposeError>;
    /// The composite node over `children`, which follow the part order of `g`.
    fn combine(&self, wf: &WorkflowNet, g: &TransitionPartition, children: Vec<PowlNode>) -> Result<PowlNode, DecomposeError>;
}

pub struct PartialOrderDecomposition {
    pub reflexive: bool,
    /// Coarsen a partition that fails its validity check with `po_closure`.
    pub closure: bool,
}

pub struct ChoiceGraphDecomposition {
    /// Coarsen a partition that fails its validity check with `cg_closure`.
    pub closure: bool,
}

/// `g`, or its closure when `g` breaks a condition and the closure is a valid
/// partition with more than one part. Otherwise `g` is kept so failures
/// report the violations of the literal partition.
fn repaired(
    wf: &WorkflowNet,
    g: TransitionPartition,
    check: fn(&WorkflowNet, &TransitionPartition) -> Result<Vec<Violation>, DecomposeError>,
    close: fn(&WorkflowNet, &TransitionPartition) -> Result<TransitionPartition, DecomposeError>,
) -> TransitionPartition {
    match check(wf, &g) {
        Ok(v) if !v.is_empty() => match close(wf, &g) {
            Ok(c) if c.len() > 1 && matches!(check(wf, &c), Ok(v) if v.is_empty()) => c,
            _ => g,
        },
        _ => g,
    }
}

impl Decomposition for PartialOrderDecomposition {
    fn name(&self) -> &'static str {
        "partial-order"
    }

    fn partition(&self, wf: &WorkflowNet) -> TransitionPartition {
        let g = decompose::po_partition(wf, self.reflexive);
        if self.closure {
            repaired(wf, g, decompose::is_conflict_hiding, decompose::po_closure)
        } else {
            g
        }
    }

    fn violations(&self, wf: &WorkflowNet, g: &TransitionPartition) -> Result<Vec<Violation>, DecomposeError> {
        decompose::is_conflict_hiding(wf, g)
    }

    fn project(&self, wf: &WorkflowNet, part: &BTreeSet<NodeId>, ids: &IdSource) -> Result<WorkflowNet, DecomposeError> {
        decompose::po_project(wf, part, ids)
    }

    fn combine(&self, wf: &WorkflowNet, g: &TransitionPartition, children: Vec<PowlNode>) -> Result<PowlNode, DecomposeError> {
        Ok(PowlNode::partial_order(decompose::execution_order(wf, g)?, children))
    }
}

impl Decomposition for ChoiceGraphDecomposition {
    fn name(&self) -> &'static str {
        "choice-graph"
    }

    fn partition(&self, wf: &WorkflowNet) -> TransitionPartition {
        let g = decompose::cg_partition(wf);
        if self.closure {
            repaired(wf, g, decompose::is_concurrency_hiding, decompose::cg_closure)
        } else {
            g
        }
    }

    fn violations(&self, wf: &WorkflowNet, g: &TransitionPartition) -> Result<Vec<Violation>, DecomposeError> {
        decompose::is_concurrency_hiding(wf, g)
    }

    fn project(&self, wf: &WorkflowNet, part: &BTreeSet<NodeId>, ids: &IdSource) -> Result<WorkflowNet, DecomposeError> {
        decompose::cg_project(wf, part, ids)
    }

    fn combine(&self, wf: &WorkflowNet, g: &TransitionPartition, children: Vec<PowlNode>) -> Result<PowlNode, DecomposeError> {
        Ok(PowlNode::choice_graph(decompose::execution_flow(wf, g)?, children))
    }
}

/// The decompositions in the order the converter tries them.
pub fn default_strategies(reflexive: bool, closure: bool) -> Vec<Box<dyn Decomposition>> {
    vec![
        Box::new(PartialOrderDecomposition { reflexive, closure }),
        Box::new(ChoiceGraphDecomposition { closure }),
    ]
}

/// Looks up a decomposition by registry name.
pub fn strategy(name: &str, reflexive: bool, closure: bool) -> Option<Box<dyn Decomposition>> {
    default_strategies(reflexive, closure).into_iter().find(|s| s.name() == name)
}
