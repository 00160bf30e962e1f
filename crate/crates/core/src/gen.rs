//! Random separable workflow nets, built from random POWL models, and the
//! conversion benchmark over them.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::convert::{convert, ConversionOptions, ConvertError};
use crate::net::{Label, WorkflowNet};
use crate::powl::{powl_to_net, CgNode, ChoiceGraphStruct, OrderStruct, PowlNode};

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub seed: u64,
    /// Number of leaves of the model, hence visible plus silent transitions.
    pub transitions: usize,
    /// Maximum number of composite levels.
    pub max_depth: usize,
    /// Relative weight of partial orders among composite nodes.
    pub partial_order_weight: f64,
    /// Relative weight of choice graphs among composite nodes.
    pub choice_graph_weight: f64,
    pub max_children: usize,
    pub silent_probability: f64,
    /// Chance of each possible back edge in a choice graph.
    pub cycle_probability: f64,
    /// Chance of each optional forward edge in orders and choice graphs.
    pub edge_probability: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            seed: 1,
            transitions: 20,
            max_depth: 6,
            partial_order_weight: 1.0,
            choice_graph_weight: 1.0,
            max_children: 5,
            silent_probability: 0.1,
            cycle_probability: 0.1,
            edge_probability: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("unsatisfiable parameters: {0}")]
    Unsatisfiable(String),
}

impl GenParams {
    fn check(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::Unsatisfiable(m.to_string()));
        for (name, p) in [
            ("silent probability", self.silent_probability),
            ("cycle probability", self.cycle_probability),
            ("edge probability", self.edge_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} {p} outside [0, 1]"));
            }
        }
        if self.transitions == 0 {
            return bad("at least one transition is needed");
        }
        if self.transitions > 1 {
            if self.max_children < 2 {
                return bad("composites need at least two children");
            }
            if !(self.partial_order_weight >= 0.0 && self.choice_graph_weight >= 0.0)
                || self.partial_order_weight + self.choice_graph_weight <= 0.0
            {
                return bad("no composite kind has positive weight");
            }
            if capacity(self.max_children, self.max_depth) < self.transitions {
                return bad(&format!(
                    "{} leaves do not fit in depth {} with {} children",
                    self.transitions, self.max_depth, self.max_children
                ));
            }
        }
        Ok(())
    }
}

/// Most leaves a tree of the given depth and fan-out can hold.
fn capacity(fan: usize, depth: usize) -> usize {
    let mut c: usize = 1;
    for _ in 0..depth {
        c = c.saturating_mul(fan);
    }
    c
}

struct Gen<'a> {
    p: &'a GenParams,
    rng: ChaCha8Rng,
    next_leaf: usize,
}

/// A random model with exactly `params.transitions` leaves. Equal parameters
/// give equal models.
pub fn random_powl(params: &GenParams) -> Result<PowlNode, GenError> {
    params.check()?;
    let mut g = Gen { p: params, rng: ChaCha8Rng::seed_from_u64(params.seed), next_leaf: 0 };
    Ok(g.node(params.transitions, params.max_depth))
}

impl Gen<'_> {
    fn node(&mut self, leaves: usize, depth: usize) -> PowlNode {
        if leaves == 1 {
            let k = self.next_leaf;
            self.next_leaf += 1;
            let label = if self.rng.gen_bool(self.p.silent_probability) {
                Label::Silent
            } else {
                Label::visible(format!("a{k}"))
            };
            return PowlNode::leaf(format!("t{k}"), label);
        }
        let child_cap = capacity(self.p.max_children, depth - 1);
        let min_k = leaves.div_ceil(child_cap).max(2);
        let max_k = self.p.max_children.min(leaves);
        let k = self.rng.gen_range(min_k..=max_k);
        let sizes = self.split(leaves, k, child_cap);
        let children: Vec<PowlNode> = sizes.into_iter().map(|n| self.node(n, depth - 1)).collect();
        let total = self.p.partial_order_weight + self.p.choice_graph_weight;
        if self.rng.gen_bool(self.p.partial_order_weight / total) {
            PowlNode::partial_order(self.order(k), children)
        } else {
            PowlNode::choice_graph(self.graph(k), children)
        }
    }

    /// `k` positive sizes summing to `n`, none above `cap`.
    fn split(&mut self, n: usize, k: usize, cap: usize) -> Vec<usize> {
        let mut sizes = vec![1; k];
        for _ in k..n {
            let open: Vec<usize> = (0..k).filter(|&i| sizes[i] < cap).collect();
            let &i = open.choose(&mut self.rng).expect("capacity checked");
            sizes[i] += 1;
        }
        sizes
    }

    fn order(&mut self, k: usize) -> OrderStruct {
        // Random topological positions keep the pairs acyclic.
        let mut pos: Vec<usize> = (0..k).collect();
        pos.shuffle(&mut self.rng);
        let mut pairs = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                if self.rng.gen_bool(self.p.edge_probability) {
                    pairs.push((pos[a], pos[b]));
                }
            }
        }
        OrderStruct::new(k, pairs).expect("pairs follow a topological order")
    }

    fn graph(&mut self, k: usize) -> ChoiceGraphStruct {
        let mut pos: Vec<usize> = (0..k).collect();
        pos.shuffle(&mut self.rng);
        let mut edges = Vec::new();
        // A DAG in which every child has a way in and a way out.
        for a in 0..k {
            let preds = a + 1;
            let pick = self.rng.gen_range(0..preds);
            edges.push((if pick == 0 { CgNode::Start } else { CgNode::Child(pos[pick - 1]) }, CgNode::Child(pos[a])));
            let succs = k - a;
            let pick = self.rng.gen_range(0..succs);
            edges.push((CgNode::Child(pos[a]), if pick == 0 { CgNode::End } else { CgNode::Child(pos[a + pick]) }));
            if self.rng.gen_bool(self.p.edge_probability) {
                edges.push((CgNode::Start, CgNode::Child(pos[a])));
            }
            if self.rng.gen_bool(self.p.edge_probability) {
                edges.push((CgNode::Child(pos[a]), CgNode::End));
            }
            for b in a + 1..k {
                if self.rng.gen_bool(self.p.edge_probability) {
                    edges.push((CgNode::Child(pos[a]), CgNode::Child(pos[b])));
                }
            }
            for b in 0..=a {
                if self.rng.gen_bool(self.p.cycle_probability) {
                    edges.push((CgNode::Child(pos[a]), CgNode::Child(pos[b])));
                }
            }
        }
        ChoiceGraphStruct::new(k, edges).expect("every child lies on a start-to-end path")
    }
}

/// A random model and the net built from it.
pub fn generate_separable_net(params: &GenParams) -> Result<(WorkflowNet, PowlNode), GenError> {
    let model = random_powl(params)?;
    let net = powl_to_net(&model).expect("generated models are valid");
    Ok((net, model))
}

/// One benchmark measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub size: usize,
    pub seed: u64,
    pub transitions: usize,
    pub places: usize,
    pub wall_ms: f64,
    pub success: bool,
    pub po_nodes: usize,
    pub cg_nodes: usize,
}

/// Generates `per_size` nets for every size (seeds `seed_base`,
/// `seed_base + 1`, ...) and times their conversion.
pub fn bench_run(
    sizes: &[usize],
    per_size: usize,
    seed_base: u64,
    base: &GenParams,
    opts: &ConversionOptions,
) -> Result<Vec<BenchRow>, BenchError> {
    let mut rows = Vec::with_capacity(sizes.len() * per_size);
    for &size in sizes {
        for k in 0..per_size as u64 {
            let params = GenParams { seed: seed_base + k, transitions: size, ..base.clone() };
            let (net, _) = generate_separable_net(&params)?;
            let start = Instant::now();
            let report = convert(&net, opts)?;
            let wall_ms = start.elapsed().as_secs_f64() * 1000.0;
            rows.push(BenchRow {
                size,
                seed: params.seed,
                transitions: net.net().transition_count(),
                places: net.net().place_count(),
                wall_ms,
                success: report.is_success(),
                po_nodes: report.stats.partial_orders,
                cg_nodes: report.stats.choice_graphs,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Convert(#[from] ConvertError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Writes rows as CSV with a header line.
pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{check_safe, check_sound, SafetyVerdict};
    use crate::io::serialize_powl;
    use proptest::prelude::*;

    #[test]
    fn deterministic_in_seed() {
        let p = GenParams { seed: 7, transitions: 12, ..Default::default() };
        assert_eq!(serialize_powl(&random_powl(&p).unwrap()), serialize_powl(&random_powl(&p).unwrap()));
        let q = GenParams { seed: 8, ..p.clone() };
        assert_ne!(serialize_powl(&random_powl(&p).unwrap()), serialize_powl(&random_powl(&q).unwrap()));
    }

    #[test]
    fn single_leaf() {
        let p = GenParams { transitions: 1, silent_probability: 0.0, ..Default::default() };
        assert_eq!(random_powl(&p).unwrap(), PowlNode::leaf("t0", Label::visible("a0")));
    }

    #[test]
    fn unsatisfiable_params() {
        let none = GenParams { partial_order_weight: 0.0, choice_graph_weight: 0.0, ..Default::default() };
        assert!(random_powl(&none).is_err());
        let shallow = GenParams { transitions: 30, max_depth: 2, max_children: 5, ..Default::default() };
        assert!(random_powl(&shallow).is_err());
        let prob = GenParams { cycle_probability: 1.5, ..Default::default() };
        assert!(random_powl(&prob).is_err());
    }

    #[test]
    fn no_cycles_when_disabled() {
        for seed in 0..30 {
            let p = GenParams { seed, transitions: 15, cycle_probability: 0.0, choice_graph_weight: 3.0, ..Default::default() };
            fn acyclic(m: &PowlNode) -> bool {
                let own = match m {
                    PowlNode::ChoiceGraph { graph, .. } => !graph.is_cyclic(),
                    _ => true,
                };
                own && m.children().iter().all(acyclic)
            }
            assert!(acyclic(&random_powl(&p).unwrap()));
        }
    }

    #[test]
    fn csv_has_header() {
        let rows = vec![BenchRow { size: 5, seed: 1, transitions: 5, places: 6, wall_ms: 0.5, success: true, po_nodes: 1, cg_nodes: 0 }];
        let mut buf = Vec::new();
        write_bench_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("size,seed,transitions,places,wall_ms,success,po_nodes,cg_nodes"));
        assert_eq!(text.lines().nth(1), Some("5,1,5,6,0.5,true,1,0"));
    }

    #[test]
    fn small_bench_all_succeed() {
        let rows = bench_run(&[8, 16], 2, 1, &GenParams::default(), &ConversionOptions::default()).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.success));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn generated_nets_are_safe_and_sound(seed in 0u64..10_000, size in 1usize..25) {
            let p = GenParams { seed, transitions: size, ..Default::default() };
            let (net, model) = generate_separable_net(&p).unwrap();
            prop_assert_eq!(model.leaf_count(), size);
            prop_assert_eq!(net.net().labels().iter().filter(|l| !l.is_silent()).count(),
                model.leaves().iter().filter(|(_, l)| !l.is_silent()).count());
            prop_assert_eq!(check_safe(&net, 200_000), SafetyVerdict::Safe);
            prop_assert!(check_sound(&net, 200_000).is_sound());
        }
    }
}
