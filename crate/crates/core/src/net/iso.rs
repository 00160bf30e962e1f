use std::collections::BTreeMap;

use super::{Label, PetriNet};

/// Number of candidate assignments the backtracking search may try.
pub const DEFAULT_ISO_BUDGET: u64 = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoVerdict {
    Isomorphic,
    NotIsomorphic,
    /// The search gave up before reaching a decision.
    BudgetExhausted,
}

/// Places and transitions merged into one node space: places first.
struct Graph {
    places: usize,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl Graph {
    fn of(net: &PetriNet) -> Self {
        let np = net.place_count();
        let n = np + net.transition_count();
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        for p in 0..np {
            for &t in net.place_post(p) {
                succ[p].push(np + t);
                pred[np + t].push(p);
            }
        }
        for t in 0..net.transition_count() {
            for &p in net.transition_post(t) {
                succ[np + t].push(p);
                pred[p].push(np + t);
            }
        }
        Graph { places: np, succ, pred }
    }

    fn len(&self) -> usize {
        self.succ.len()
    }
}

/// Colour refinement run on both nets with a shared palette, so equal colours
/// mean equal local structure across the two nets.
fn refine(a: (&PetriNet, &Graph), b: (&PetriNet, &Graph)) -> Option<(Vec<u32>, Vec<u32>)> {
    let mut palette: BTreeMap<(bool, Option<Label>, usize, usize), u32> = BTreeMap::new();
    let mut initial = |net: &PetriNet, g: &Graph| -> Vec<u32> {
        (0..g.len())
            .map(|v| {
                let label = (v >= g.places).then(|| net.label(v - g.places).clone());
                let key = (v < g.places, label, g.pred[v].len(), g.succ[v].len());
                let next = palette.len() as u32;
                *palette.entry(key).or_insert(next)
            })
            .collect()
    };
    let mut ca = initial(a.0, a.1);
    let mut cb = initial(b.0, b.1);
    let mut classes = palette.len();
    loop {
        if histogram(&ca) != histogram(&cb) {
            return None;
        }
        let mut palette: BTreeMap<(u32, Vec<u32>, Vec<u32>), u32> = BTreeMap::new();
        let mut step = |g: &Graph, c: &[u32]| -> Vec<u32> {
            (0..g.len())
                .map(|v| {
                    let mut ins: Vec<u32> = g.pred[v].iter().map(|&u| c[u]).collect();
                    let mut outs: Vec<u32> = g.succ[v].iter().map(|&u| c[u]).collect();
                    ins.sort_unstable();
                    outs.sort_unstable();
                    let next = palette.len() as u32;
                    *palette.entry((c[v], ins, outs)).or_insert(next)
                })
                .collect()
        };
        let na = step(a.1, &ca);
        let nb = step(b.1, &cb);
        let n = palette.len();
        ca = na;
        cb = nb;
        if n == classes {
            if histogram(&ca) != histogram(&cb) {
                return None;
            }
            return Some((ca, cb));
        }
        classes = n;
    }
}

fn histogram(c: &[u32]) -> BTreeMap<u32, usize> {
    let mut h = BTreeMap::new();
    for &x in c {
        *h.entry(x).or_insert(0) += 1;
    }
    h
}

struct Search<'a> {
    ga: &'a Graph,
    gb: &'a Graph,
    ca: &'a [u32],
    cb: &'a [u32],
    order: Vec<usize>,
    map: Vec<Option<usize>>,
    used: Vec<bool>,
    budget: u64,
}

impl Search<'_> {
    fn run(&mut self, depth: usize) -> Result<bool, ()> {
        if depth == self.order.len() {
            return Ok(true);
        }
        let u = self.order[depth];
        for v in 0..self.gb.len() {
            if self.used[v] || self.cb[v] != self.ca[u] {
                continue;
            }
            if self.budget == 0 {
                return Err(());
            }
            self.budget -= 1;
            if !self.consistent(u, v) {
                continue;
            }
            self.map[u] = Some(v);
            self.used[v] = true;
            if self.run(depth + 1)? {
                return Ok(true);
            }
            self.map[u] = None;
            self.used[v] = false;
        }
        Ok(false)
    }

    /// Every arc between `u` and an already mapped node has an image arc.
    /// Equal arc counts make this one-sided check sufficient.
    fn consistent(&self, u: usize, v: usize) -> bool {
        let ok = |adj_a: &[usize], adj_b: &[usize]| {
            adj_a
                .iter()
                .filter_map(|&w| if w == u { Some(v) } else { self.map[w] })
                .all(|img| adj_b.contains(&img))
        };
        ok(&self.ga.succ[u], &self.gb.succ[v]) && ok(&self.ga.pred[u], &self.gb.pred[v])
    }
}

impl PetriNet {
    /// Whether label- and arc-preserving bijections between the places and
    /// transitions of the two nets exist. Budget exhaustion answers `false`;
    /// use [`PetriNet::isomorphism`] to tell the two apart.
    pub fn isomorphic(&self, other: &PetriNet) -> bool {
        self.isomorphism(other, DEFAULT_ISO_BUDGET) == IsoVerdict::Isomorphic
    }

    pub fn isomorphism(&self, other: &PetriNet, budget: u64) -> IsoVerdict {
        if self.place_count() != other.place_count()
            || self.transition_count() != other.transition_count()
            || self.arc_count() != other.arc_count()
            || self.label_multiset() != other.label_multiset()
        {
            return IsoVerdict::NotIsomorphic;
        }
        let ga = Graph::of(self);
        let gb = Graph::of(other);
        let Some((ca, cb)) = refine((self, &ga), (other, &gb)) else {
            return IsoVerdict::NotIsomorphic;
        };
        // Rarest colours first, then neighbours of what is already placed.
        let hist = histogram(&ca);
        let mut order = Vec::with_capacity(ga.len());
        let mut placed = vec![false; ga.len()];
        let mut seeds: Vec<usize> = (0..ga.len()).collect();
        seeds.sort_by_key(|&v| (hist[&ca[v]], v));
        for s in seeds {
            if placed[s] {
                continue;
            }
            let mut queue = std::collections::VecDeque::from([s]);
            placed[s] = true;
            while let Some(v) = queue.pop_front() {
                order.push(v);
                let mut next: Vec<usize> = ga.succ[v]
                    .iter()
                    .chain(&ga.pred[v])
                    .copied()
                    .filter(|&w| !placed[w])
                    .collect();
                next.sort_by_key(|&w| (hist[&ca[w]], w));
                next.dedup();
                for w in next {
                    if !placed[w] {
                        placed[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        let mut search = Search {
            ga: &ga,
            gb: &gb,
            ca: &ca,
            cb: &cb,
            order,
            map: vec![None; ga.len()],
            used: vec![false; gb.len()],
            budget,
        };
        match search.run(0) {
            Ok(true) => IsoVerdict::Isomorphic,
            Ok(false) => IsoVerdict::NotIsomorphic,
            Err(()) => IsoVerdict::BudgetExhausted,
        }
    }
}
