//! Recursive conversion of safe and sound workflow nets into POWL models.

mod strategy;

use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::behavior::{
    bounded_equal, check_safe, check_sound, enumerate_language, BoundedEq, LanguageError, SafetyVerdict,
    DEFAULT_STATE_BUDGET,
};
use crate::decompose::{DecomposeError, Violation};
use crate::net::{IdSource, IsoVerdict, NodeId, WorkflowNet, DEFAULT_ISO_BUDGET};
use crate::partition::TransitionPartition;
use crate::powl::{language_bounded, PowlNode};
use crate::preprocess::{self, ReductionRule};

pub use strategy::{
    default_strategies, strategy, ChoiceGraphDecomposition, Decomposition, PartialOrderDecomposition,
};

/// What to do when no decomposition applies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FallThroughPolicy {
    /// Report the irreducible fragment and give up.
    #[default]
    Fail,
}

#[derive(Debug, Clone)]
pub struct ConversionOptions {
    pub preprocess: bool,
    /// Rule names for preprocessing, in application order.
    pub rules: Vec<String>,
    /// Preprocess every projection again instead of only the input.
    pub preprocess_each_level: bool,
    pub fall_through: FallThroughPolicy,
    /// Check safeness and soundness of every projection.
    pub verify_projections: bool,
    /// Count a transition as reaching itself in partial-order partitioning.
    pub reflexive_reach: bool,
    /// Coarsen partitions that fail their validity check along structural
    /// invariants of composed nets before giving up on a strategy.
    pub partition_closure: bool,
    /// Search budget of the isomorphism progress guard.
    pub iso_budget: u64,
    /// State budget for projection checks.
    pub state_budget: usize,
}

impl Default for ConversionOptions {
    fn default() -> Self {
        ConversionOptions {
            preprocess: true,
            rules: vec!["dup".into(), "split".into(), "join".into()],
            preprocess_each_level: false,
            fall_through: FallThroughPolicy::Fail,
            verify_projections: false,
            reflexive_reach: true,
            partition_closure: true,
            iso_budget: DEFAULT_ISO_BUDGET,
            state_budget: DEFAULT_STATE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvertError {
    #[error("unknown reduction rule `{0}`")]
    UnknownRule(String),
    /// A partition that passed its validity check could not be projected or
    /// combined. Points at a bug, not at the input.
    #[error("internal invariant broken by the {strategy} decomposition: {error}")]
    InternalInvariant { strategy: &'static str, error: DecomposeError },
}

/// Why a decomposition was not used on a net.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    /// The partition has a single part.
    SinglePart,
    Violations(Vec<Violation>),
    /// Projecting on this part gives back the net itself.
    NoProgress { part: usize },
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::SinglePart => f.write_str("partition has a single part"),
            Rejection::Violations(vs) => {
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
            Rejection::NoProgress { part } => {
                write!(f, "no progress: projection on part {part} is isomorphic to the net")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Attempt {
    pub strategy: &'static str,
    pub partition: TransitionPartition,
    pub rejection: Rejection,
}

/// The sub-net where no decomposition applied.
#[derive(Debug, Clone)]
pub struct Failure {
    pub net: WorkflowNet,
    pub attempts: Vec<Attempt>,
    /// Recursion depth of the fragment; the input is at depth 0.
    pub depth: usize,
}

impl Failure {
    pub fn attempt(&self, strategy: &str) -> Option<&Attempt> {
        self.attempts.iter().find(|a| a.strategy == strategy)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let net = self.net.net();
        write!(
            f,
            "irreducible fragment at depth {} ({} places, {} transitions)",
            self.depth,
            net.place_count(),
            net.transition_count()
        )?;
        for a in &self.attempts {
            write!(f, "\n  {}: {:?}\n    {}", a.strategy, a.partition, a.rejection)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Success(PowlNode),
    Failure(Box<Failure>),
}

/// A projection that broke safeness or soundness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionIssue {
    pub strategy: &'static str,
    pub depth: usize,
    pub part: usize,
    pub problem: String,
}

#[derive(Debug, Clone, Default)]
pub struct ConversionStats {
    /// Deepest recursion level reached.
    pub depth: usize,
    pub partial_orders: usize,
    pub choice_graphs: usize,
    pub leaves: usize,
    pub projections: usize,
    pub wall: Duration,
}

#[derive(Debug, Clone)]
pub struct ConversionReport {
    pub outcome: Outcome,
    /// The net handed to the recursion, after preprocessing if enabled.
    pub input: WorkflowNet,
    /// Preprocessing rules in the order they fired.
    pub rules_applied: Vec<&'static str>,
    pub stats: ConversionStats,
    /// Only filled when projections are verified.
    pub projection_issues: Vec<ProjectionIssue>,
}

impl ConversionReport {
    pub fn model(&self) -> Option<&PowlNode> {
        match &self.outcome {
            Outcome::Success(m) => Some(m),
            Outcome::Failure(_) => None,
        }
    }

    pub fn failure(&self) -> Option<&Failure> {
        match &self.outcome {
            Outcome::Success(_) => None,
            Outcome::Failure(f) => Some(f),
        }
    }

    pub fn is_success(&self) -> bool {
        self.model().is_some()
    }
}

/// The transition of a net that is exactly `source -> t -> sink`.
pub fn is_base_case(wf: &WorkflowNet) -> Option<&NodeId> {
    let net = wf.net();
    if net.transition_count() != 1 || net.place_count() != 2 || net.arc_count() != 2 {
        return None;
    }
    let ok = net.transition_pre(0) == [wf.source()] && net.transition_post(0) == [wf.sink()];
    ok.then(|| net.transition_id(0))
}

fn resolve_rules(names: &[String]) -> Result<Vec<Box<dyn ReductionRule>>, ConvertError> {
    names
        .iter()
        .map(|n| preprocess::rule(n).ok_or_else(|| ConvertError::UnknownRule(n.clone())))
        .collect()
}

struct Ctx<'a> {
    opts: &'a ConversionOptions,
    strategies: Vec<Box<dyn Decomposition>>,
    rules: Vec<Box<dyn ReductionRule>>,
    ids: IdSource,
    stats: ConversionStats,
    issues: Vec<ProjectionIssue>,
}

/// Converts `wf`, which the caller guarantees to be safe and sound.
pub fn convert(wf: &WorkflowNet, opts: &ConversionOptions) -> Result<ConversionReport, ConvertError> {
    let start = Instant::now();
    let rules = resolve_rules(&opts.rules)?;
    let ids = IdSource::above(wf.net());
    let (input, rules_applied) = if opts.preprocess {
        let pre = preprocess::preprocess(wf, &rules, &ids);
        (pre.net, pre.applied)
    } else {
        (wf.clone(), Vec::new())
    };
    let mut ctx = Ctx {
        opts,
        strategies: default_strategies(opts.reflexive_reach, opts.partition_closure),
        rules,
        ids,
        stats: ConversionStats::default(),
        issues: Vec::new(),
    };
    let outcome = match ctx.convert(&input, 0)? {
        Ok(model) => {
            ctx.stats.partial_orders = model.partial_order_count();
            ctx.stats.choice_graphs = model.choice_graph_count();
            ctx.stats.leaves = model.leaf_count();
            Outcome::Success(model)
        }
        Err(failure) => Outcome::Failure(Box::new(failure)),
    };
    ctx.stats.wall = start.elapsed();
    Ok(ConversionReport { outcome, input, rules_applied, stats: ctx.stats, projection_issues: ctx.issues })
}

impl Ctx<'_> {
    fn convert(&mut self, wf: &WorkflowNet, depth: usize) -> Result<Result<PowlNode, Failure>, ConvertError> {
        self.stats.depth = self.stats.depth.max(depth);
        let pre;
        let wf = if depth > 0 && self.opts.preprocess && self.opts.preprocess_each_level {
            pre = preprocess::preprocess(wf, &self.rules, &self.ids).net;
            &pre
        } else {
            wf
        };
        if let Some(t) = is_base_case(wf) {
            let label = wf.net().label_of(t).expect("own transition").clone();
            return Ok(Ok(PowlNode::leaf(t.clone(), label)));
        }
        let mut attempts = Vec::new();
        for k in 0..self.strategies.len() {
            let s = &self.strategies[k];
            let name = s.name();
            let g = s.partition(wf);
            let internal = |error| ConvertError::InternalInvariant { strategy: name, error };
            let rejection = if g.len() < 2 {
                Some(Rejection::SinglePart)
            } else {
                let v = s.violations(wf, &g).map_err(internal)?;
                (!v.is_empty()).then_some(Rejection::Violations(v))
            };
            if let Some(rejection) = rejection {
                attempts.push(Attempt { strategy: name, partition: g, rejection });
                continue;
            }
            let mut subs = Vec::with_capacity(g.len());
            let mut stuck = None;
            for (i, part) in g.parts().iter().enumerate() {
                let sub = s.project(wf, part, &self.ids).map_err(internal)?;
                if self.same_as(&sub, wf) {
                    stuck = Some(i);
                    break;
                }
                subs.push(sub);
            }
            if let Some(part) = stuck {
                attempts.push(Attempt { strategy: name, partition: g, rejection: Rejection::NoProgress { part } });
                continue;
            }
            self.stats.projections += subs.len();
            if self.opts.verify_projections {
                self.check_projections(name, depth, &subs);
            }
            let mut children = Vec::with_capacity(subs.len());
            for sub in &subs {
                match self.convert(sub, depth + 1)? {
                    Ok(child) => children.push(child),
                    Err(failure) => return Ok(Err(failure)),
                }
            }
            let s = &self.strategies[k];
            return Ok(Ok(s.combine(wf, &g, children).map_err(internal)?));
        }
        match self.opts.fall_through {
            FallThroughPolicy::Fail => Ok(Err(Failure { net: wf.clone(), attempts, depth })),
        }
    }

    /// Progress guard. An undecided isomorphism search counts as a match so
    /// that recursion cannot run on the same net forever.
    fn same_as(&self, sub: &WorkflowNet, wf: &WorkflowNet) -> bool {
        sub.net().isomorphism(wf.net(), self.opts.iso_budget) != IsoVerdict::NotIsomorphic
    }

    fn check_projections(&mut self, strategy: &'static str, depth: usize, subs: &[WorkflowNet]) {
        for (part, sub) in subs.iter().enumerate() {
            let mut problems = Vec::new();
            match check_safe(sub, self.opts.state_budget) {
                SafetyVerdict::Safe => {}
                other => problems.push(format!("{other:?}")),
            }
            let sound = check_sound(sub, self.opts.state_budget);
            if !sound.is_sound() {
                problems.push(format!("{sound:?}"));
            }
            for problem in problems {
                self.issues.push(ProjectionIssue { strategy, depth, part, problem });
            }
        }
    }
}

/// Outcome of comparing a converted model with its net.
#[derive(Debug, Clone)]
pub struct Verification {
    pub max_len: usize,
    pub result: Result<BoundedEq, LanguageError>,
}

impl Verification {
    pub fn is_equal(&self) -> bool {
        matches!(&self.result, Ok(eq) if eq.is_equal())
    }
}

/// [`convert`] followed, on success, by a comparison of the traces of `wf`
/// and of the model up to `max_len` visible steps.
pub fn convert_and_verify(
    wf: &WorkflowNet,
    opts: &ConversionOptions,
    max_len: usize,
) -> Result<(ConversionReport, Option<Verification>), ConvertError> {
    let report = convert(wf, opts)?;
    let verification = report.model().map(|model| {
        let result = enumerate_language(wf, max_len, opts.state_budget)
            .map(|net_lang| bounded_equal(&net_lang, &language_bounded(model, max_len)));
        Verification { max_len, result }
    });
    Ok((report, verification))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::test_util::wf;
    use crate::decompose::fixtures::*;
    use crate::powl::{powl_to_net, CgNode, ChoiceGraphStruct, OrderStruct};
    use crate::net::Label;

    fn no_pre() -> ConversionOptions {
        ConversionOptions { preprocess: false, verify_projections: true, ..Default::default() }
    }

    fn verified(n: &WorkflowNet, opts: &ConversionOptions, bound: usize) -> ConversionReport {
        let (report, v) = convert_and_verify(n, opts, bound).unwrap();
        let v = v.unwrap_or_else(|| panic!("{}", report.failure().unwrap()));
        assert!(v.is_equal(), "{:?}", v.result);
        assert_eq!(report.projection_issues, vec![]);
        report
    }

    #[test]
    fn base_case_detection() {
        let base = wf(&[("i", "a"), ("a", "o")]);
        assert_eq!(is_base_case(&base).map(NodeId::as_str), Some("a"));
        assert!(is_base_case(&sequence()).is_none());
        let with_extra = wf(&[("i", "a"), ("a", "o"), ("a", "p1"), ("p1", "b"), ("b", "o")]);
        assert!(is_base_case(&with_extra).is_none());
    }

    #[test]
    fn base_case_converts_to_leaf() {
        let r = convert(&wf(&[("i", "a"), ("a", "o")]), &no_pre()).unwrap();
        assert_eq!(r.model(), Some(&PowlNode::leaf("a", Label::visible("a"))));
    }

    #[test]
    fn blocks_convert() {
        let r = verified(&and_block(), &no_pre(), 6);
        assert!(matches!(r.model(), Some(PowlNode::PartialOrder { .. })));
        assert_eq!(r.stats.leaves, 4);
        let r = verified(&xor_block(), &no_pre(), 6);
        // a; (b | c); d is a partial order whose middle child is a choice.
        assert_eq!((r.stats.partial_orders, r.stats.choice_graphs), (1, 1));
        let r = verified(&loop_net(), &no_pre(), 8);
        assert!(r.stats.depth >= 1);
        verified(&sequence(), &no_pre(), 4);
    }

    #[test]
    fn sequential_nets_take_the_partial_order_branch() {
        let r = convert(&sequence(), &no_pre()).unwrap();
        let PowlNode::PartialOrder { order, .. } = r.model().unwrap() else { panic!() };
        assert_eq!(order, &OrderStruct::total(3).unwrap());
    }

    #[test]
    fn failure_reports_both_attempts() {
        // choice between a and b that is remembered until the end
        let n = wf(&[
            ("i", "a"),
            ("i", "b"),
            ("a", "p2"),
            ("a", "p3"),
            ("b", "p2"),
            ("b", "p4"),
            ("p2", "c"),
            ("c", "p5"),
            ("p3", "d"),
            ("p5", "d"),
            ("p4", "e"),
            ("p5", "e"),
            ("d", "o"),
            ("e", "o"),
        ]);
        let r = convert(&n, &no_pre()).unwrap();
        let f = r.failure().expect("not separable");
        assert_eq!(f.depth, 0);
        let po = f.attempt("partial-order").unwrap();
        let Rejection::Violations(vs) = &po.rejection else { panic!("{}", po.rejection) };
        assert!(vs.iter().any(|v| v.condition() == "single exit"));
        assert!(f.attempt("choice-graph").is_some());
        assert!(f.to_string().contains("partial-order"));
    }

    #[test]
    fn preprocessing_fires_only_when_enabled() {
        let n = wf(&[
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
        ]);
        assert!(!convert(&n, &no_pre()).unwrap().is_success());
        let opts = ConversionOptions { verify_projections: true, ..Default::default() };
        let r = verified(&n, &opts, 8);
        assert_eq!(r.rules_applied, vec!["split", "join"]);
        let per_level = ConversionOptions { preprocess_each_level: true, ..opts };
        verified(&n, &per_level, 8);
    }

    #[test]
    fn unknown_rule_is_rejected() {
        let opts = ConversionOptions { rules: vec!["fold".into()], ..Default::default() };
        assert_eq!(convert(&sequence(), &opts).unwrap_err(), ConvertError::UnknownRule("fold".into()));
    }

    #[test]
    fn round_trip_through_model() {
        let leaf = |a: &str| PowlNode::leaf(a, Label::visible(a));
        let par = PowlNode::partial_order(OrderStruct::unordered(2).unwrap(), vec![leaf("b"), leaf("c")]);
        let g = ChoiceGraphStruct::new(
            3,
            [
                (CgNode::Start, CgNode::Child(0)),
                (CgNode::Child(0), CgNode::Child(1)),
                (CgNode::Child(1), CgNode::Child(2)),
                (CgNode::Child(2), CgNode::Child(1)),
                (CgNode::Child(1), CgNode::End),
            ],
        )
        .unwrap();
        let model = PowlNode::choice_graph(g, vec![leaf("a"), par, leaf("d")]);
        let n = powl_to_net(&model).unwrap();
        let r = verified(&n, &no_pre(), 7);
        assert!(r.stats.choice_graphs >= 1 && r.stats.partial_orders >= 1);
    }

    fn leaf(a: &str) -> PowlNode {
        PowlNode::leaf(a, Label::visible(a))
    }

    fn cg(n: usize, edges: &[(i64, i64)]) -> ChoiceGraphStruct {
        // -1 is start, -2 is end.
        let node = |x: i64| match x {
            -1 => CgNode::Start,
            -2 => CgNode::End,
            i => CgNode::Child(i as usize),
        };
        ChoiceGraphStruct::new(n, edges.iter().map(|&(a, b)| (node(a), node(b)))).unwrap()
    }

    /// Succeeds with the closure, fails without it.
    fn needs_closure(model: &PowlNode, bound: usize) {
        let n = powl_to_net(model).unwrap();
        let literal = ConversionOptions { partition_closure: false, ..no_pre() };
        assert!(!convert(&n, &literal).unwrap().is_success());
        verified(&n, &no_pre(), bound);
    }

    #[test]
    fn crossed_order_inside_a_loop() {
        // {a, b} both before {c, d}, repeated with e in between
        let order = OrderStruct::new(4, [(0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        let body = PowlNode::partial_order(order, vec![leaf("a"), leaf("b"), leaf("c"), leaf("d")]);
        let model = PowlNode::choice_graph(cg(2, &[(-1, 0), (0, 1), (1, 0), (0, -2)]), vec![body, leaf("e")]);
        needs_closure(&model, 9);
    }

    #[test]
    fn trailing_self_loop_inside_concurrency() {
        // a then any number of b, concurrently with c
        let looped = PowlNode::choice_graph(cg(2, &[(-1, 0), (0, 1), (0, -2), (1, 1), (1, -2)]), vec![leaf("a"), leaf("b")]);
        let model = PowlNode::partial_order(OrderStruct::unordered(2).unwrap(), vec![looped, leaf("c")]);
        needs_closure(&model, 6);
    }

    #[test]
    fn choice_ending_in_a_fork_inside_a_loop() {
        // (a then b, or just b') forks into c || d, the whole thing repeatable
        let pick = PowlNode::choice_graph(cg(3, &[(-1, 0), (-1, 2), (0, 1), (1, -2), (2, -2)]), vec![leaf("a"), leaf("b"), leaf("x")]);
        let order = OrderStruct::new(3, [(0, 1), (0, 2)]).unwrap();
        let region = PowlNode::partial_order(order, vec![pick, leaf("c"), leaf("d")]);
        let model = PowlNode::choice_graph(cg(2, &[(-1, 0), (0, 1), (1, 0), (0, -2)]), vec![region, leaf("e")]);
        needs_closure(&model, 8);
    }
}
