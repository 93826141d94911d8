//! Loop-erased random walks, Wilson's algorithm on wired graphs, exact sampling on small tori
//! and connectivity statistics.

pub mod torus;

use std::collections::HashMap;
use std::hash::Hash;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::WiredInstance;
use crate::numeric::{rat_to_f64, Rat};
use crate::temperley::OrientedForest;

pub use torus::{exact_torus_sample, ConnectivityStats, ExactStats, PairRecord, TorusEnsemble};

/// Default walk-step budget for a single Wilson sample.
pub const STEP_BUDGET: usize = 50_000_000;

/// A rooted weighted directed graph on which random walks run.
#[derive(Clone, Debug)]
pub struct Network {
    /// Half-edge ids leaving every vertex (only those with positive weight).
    pub out: Vec<Vec<usize>>,
    pub head: Vec<usize>,
    pub weight: Vec<Rat>,
    /// Running sums of the out-weights of every vertex, aligned with `out`.
    pub cumulative: Vec<Vec<f64>>,
    pub root: usize,
}

impl Network {
    /// Builds a network from `(tail, head, forward weight, backward weight)` edges; half `2i`
    /// runs tail to head and `2i + 1` head to tail.
    pub fn from_edges(vertices: usize, root: usize, edges: &[(usize, usize, Rat, Rat)]) -> Result<Self> {
        if root >= vertices {
            return Err(Error::InvalidInput(format!("root {root} out of range")));
        }
        let mut out = vec![Vec::new(); vertices];
        let mut head = Vec::with_capacity(2 * edges.len());
        let mut weight = Vec::with_capacity(2 * edges.len());
        for (i, (t, h, wf, wb)) in edges.iter().enumerate() {
            if *t >= vertices || *h >= vertices {
                return Err(Error::InvalidInput(format!("edge {i} has an endpoint out of range")));
            }
            for (dir, (from, to, w)) in [(*t, *h, wf), (*h, *t, wb)].into_iter().enumerate() {
                if *w < Rat::from_integer(0.into()) {
                    return Err(Error::NegativeWeight { edge: i.to_string() });
                }
                if *w > Rat::from_integer(0.into()) {
                    out[from].push(2 * i + dir);
                }
                head.push(to);
                weight.push(w.clone());
            }
        }
        Self::finish(out, head, weight, root)
    }

    pub fn from_wired(w: &WiredInstance) -> Result<Self> {
        let p = w.primal();
        let mut out = vec![Vec::new(); p.vertex_count()];
        let mut head = Vec::with_capacity(2 * p.edge_count());
        let mut weight = Vec::with_capacity(2 * p.edge_count());
        for h in 0..2 * p.edge_count() {
            let c = p.half_weight(h).clone();
            if c > Rat::from_integer(0.into()) {
                out[p.emb.tail(h)].push(h);
            }
            head.push(p.emb.head(h));
            weight.push(c);
        }
        Self::finish(out, head, weight, w.root())
    }

    fn finish(out: Vec<Vec<usize>>, head: Vec<usize>, weight: Vec<Rat>, root: usize) -> Result<Self> {
        let cumulative = out
            .iter()
            .map(|hs| {
                let mut acc = 0.0;
                hs.iter()
                    .map(|&h| {
                        acc += rat_to_f64(&weight[h]);
                        acc
                    })
                    .collect()
            })
            .collect();
        let net = Network { out, head, weight, cumulative, root };
        for v in 0..net.vertex_count() {
            if v != root && net.out[v].is_empty() {
                return Err(Error::InvalidInput(format!("vertex {v} has no positive out-weight")));
            }
        }
        Ok(net)
    }

    pub fn vertex_count(&self) -> usize {
        self.out.len()
    }

    /// Transition probabilities `p(v, .)` over the halves leaving `v`.
    pub fn transition(&self, v: usize) -> Vec<(usize, Rat)> {
        let total: Rat = self.out[v].iter().map(|&h| self.weight[h].clone()).sum();
        self.out[v].iter().map(|&h| (h, &self.weight[h] / &total)).collect()
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.out[u].iter().any(|&h| self.head[h] == v)
    }

    /// Draws the next half-edge out of `v`.
    pub fn step<R: Rng>(&self, v: usize, rng: &mut R) -> usize {
        let cum = &self.cumulative[v];
        let x = rng.gen::<f64>() * cum[cum.len() - 1];
        let k = cum.partition_point(|&c| c <= x).min(cum.len() - 1);
        self.out[v][k]
    }

    pub fn tree_weight(&self, parent: &OrientedForest) -> Rat {
        parent.iter().flatten().map(|&h| self.weight[h].clone()).product()
    }
}

/// Generator for replica `stream` of a run keyed by `seed`.
pub fn replica_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A random walk in progress.
#[derive(Clone, Debug)]
pub struct RandomWalkState {
    pub current: usize,
    pub stream: u64,
    pub steps: usize,
    rng: ChaCha8Rng,
}

impl RandomWalkState {
    pub fn new(start: usize, seed: u64, stream: u64) -> Self {
        RandomWalkState { current: start, stream, steps: 0, rng: replica_rng(seed, stream) }
    }

    /// Moves one step and returns the half-edge used.
    pub fn step(&mut self, net: &Network) -> usize {
        let h = net.step(self.current, &mut self.rng);
        self.current = net.head[h];
        self.steps += 1;
        h
    }

    /// Walks until `stop` holds, returning the visited vertices (start included).
    pub fn run_until(&mut self, net: &Network, budget: usize, stop: impl Fn(usize) -> bool) -> Result<Vec<usize>> {
        let mut path = vec![self.current];
        while !stop(self.current) {
            if self.steps >= budget {
                return Err(Error::Invariant(format!("walk exceeded its budget of {budget} steps")));
            }
            self.step(net);
            path.push(self.current);
        }
        Ok(path)
    }
}

/// Loop erasure by the last-exit rule: after `u_j`, continue from the step following the last
/// visit of `u_j`.
pub fn loop_erase<T: Copy + Eq + Hash>(path: &[T]) -> Vec<T> {
    let Some(&first) = path.first() else {
        return Vec::new();
    };
    let mut last = HashMap::with_capacity(path.len());
    for (i, &v) in path.iter().enumerate() {
        last.insert(v, i);
    }
    let mut out = vec![first];
    let mut k = last[&first];
    while k + 1 < path.len() {
        let v = path[k + 1];
        out.push(v);
        k = last[&v];
    }
    out
}

/// Loop erasure of a vertex path on `net`, rejecting non-adjacent steps.
pub fn loop_erase_checked(net: &Network, path: &[usize]) -> Result<Vec<usize>> {
    for (i, w) in path.windows(2).enumerate() {
        if w[0] >= net.vertex_count() || w[1] >= net.vertex_count() || !net.adjacent(w[0], w[1]) {
            return Err(Error::InvalidInput(format!("step {i} from {} to {} is not an edge", w[0], w[1])));
        }
    }
    Ok(loop_erase(path))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum ScanOrder {
    #[default]
    LowestFirst,
    HighestFirst,
}

/// A spanning tree oriented towards the root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SampledTree {
    /// Outgoing half-edge of every vertex, `None` at the root.
    pub parent: OrientedForest,
    #[serde(serialize_with = "crate::numeric::serialize_rat")]
    pub weight: Rat,
}

impl SampledTree {
    /// Checks that the tree is acyclic, spans every vertex and is rooted at `net.root`.
    pub fn validate(&self, net: &Network) -> Result<()> {
        let n = net.vertex_count();
        if self.parent.len() != n || self.parent[net.root].is_some() {
            return Err(Error::Invariant("tree is not rooted at the network root".into()));
        }
        for v in 0..n {
            let mut u = v;
            let mut steps = 0;
            while u != net.root {
                let h = self.parent[u].ok_or_else(|| Error::Invariant(format!("vertex {u} has no parent")))?;
                u = net.head[h];
                steps += 1;
                if steps > n {
                    return Err(Error::Invariant("tree contains a cycle".into()));
                }
            }
        }
        Ok(())
    }
}

/// Wilson's algorithm: loop-erased walks from every vertex not yet in the tree, in scan order.
pub fn wilson_sample(net: &Network, seed: u64, stream: u64, order: ScanOrder) -> Result<SampledTree> {
    wilson_sample_with_budget(net, seed, stream, order, STEP_BUDGET)
}

pub fn wilson_sample_with_budget(
    net: &Network,
    seed: u64,
    stream: u64,
    order: ScanOrder,
    budget: usize,
) -> Result<SampledTree> {
    let n = net.vertex_count();
    let mut rng = replica_rng(seed, stream);
    let mut in_tree = vec![false; n];
    in_tree[net.root] = true;
    let mut next: OrientedForest = vec![None; n];
    let mut steps = 0usize;
    let scan: Vec<usize> = match order {
        ScanOrder::LowestFirst => (0..n).collect(),
        ScanOrder::HighestFirst => (0..n).rev().collect(),
    };
    for start in scan {
        let mut u = start;
        while !in_tree[u] {
            if steps >= budget {
                return Err(Error::Invariant(format!("Wilson walk exceeded its budget of {budget} steps")));
            }
            let h = net.step(u, &mut rng);
            next[u] = Some(h);
            u = net.head[h];
            steps += 1;
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            u = net.head[next[u].expect("walk left a successor")];
        }
    }
    next[net.root] = None;
    let weight = net.tree_weight(&next);
    Ok(SampledTree { parent: next, weight })
}

/// `count` independent Wilson samples; replica `i` uses stream `i`.
pub fn wilson_samples(net: &Network, count: usize, seed: u64, order: ScanOrder) -> Result<Vec<SampledTree>> {
    (0..count as u64).into_par_iter().map(|i| wilson_sample(net, seed, i, order)).collect()
}

const CHUNK: usize = 4096;

/// Histogram of sampled trees over a reference list of trees.
pub fn tree_histogram(
    net: &Network,
    trees: &[OrientedForest],
    count: usize,
    seed: u64,
    order: ScanOrder,
) -> Result<Vec<u64>> {
    let index: HashMap<&OrientedForest, usize> = trees.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let chunks: Vec<Vec<u64>> = (0..count.div_ceil(CHUNK) as u64)
        .into_par_iter()
        .map(|c| {
            let mut hist = vec![0u64; trees.len()];
            for i in c * CHUNK as u64..((c + 1) * CHUNK as u64).min(count as u64) {
                let t = wilson_sample(net, seed, i, order)?;
                let k = index
                    .get(&t.parent)
                    .ok_or_else(|| Error::Invariant("sampled tree missing from the reference list".into()))?;
                hist[*k] += 1;
            }
            Ok(hist)
        })
        .collect::<Result<_>>()?;
    let mut hist = vec![0u64; trees.len()];
    for c in chunks {
        for (a, b) in hist.iter_mut().zip(c) {
            *a += b;
        }
    }
    Ok(hist)
}

/// Pearson statistic of observed counts against expected probabilities; cells with zero
/// probability must be empty.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> Result<f64> {
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0;
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * total as f64;
        if e == 0.0 {
            if o != 0 {
                return Err(Error::Invariant("observation in a zero-probability cell".into()));
            }
            continue;
        }
        stat += (o as f64 - e).powi(2) / e;
    }
    Ok(stat)
}

/// Two-sample chi-square statistic of homogeneity and its degrees of freedom.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> (f64, usize) {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let total = (na + nb) as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        cells += 1;
        for (o, n) in [(x, na), (y, nb)] {
            let e = col * n as f64 / total;
            stat += (o as f64 - e).powi(2) / e;
        }
    }
    (stat, cells.saturating_sub(1))
}

/// Total-variation distance between an empirical histogram and a distribution.
pub fn total_variation(observed: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum();
    0.5 * observed.iter().zip(probs).map(|(&o, &p)| (o as f64 / total as f64 - p).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_exit_examples() {
        assert_eq!(loop_erase(&['a', 'b', 'a', 'c']), vec!['a', 'c']);
        assert_eq!(loop_erase(&['a', 'b', 'c', 'b', 'd', 'a', 'e']), vec!['a', 'e']);
        assert_eq!(loop_erase(&[1, 2, 3]), vec![1, 2, 3]);
        assert_eq!(loop_erase::<u8>(&[]), Vec::<u8>::new());
    }

    #[test]
    fn two_vertex_path_trees() {
        let r = |n: i64| Rat::from_integer(n.into());
        let net = Network::from_edges(3, 2, &[(0, 1, r(1), r(3)), (1, 2, r(2), r(1))]).unwrap();
        let t = wilson_sample(&net, 7, 0, ScanOrder::LowestFirst).unwrap();
        t.validate(&net).unwrap();
    }
}
