//! Temperley's bijection between dimers of the double graph and pairs of oriented forests,
//! together with the exhaustive enumeration oracles used to check it.

use std::collections::BTreeMap;

use serde_json::json;

use crate::error::{Error, Result};
use crate::lattice::double::{DoubleGraph, HEAD_END, LEFT_FACE, RIGHT_FACE, TAIL_END};
use crate::lattice::embedded::{edge_of, Embedded};
use crate::lattice::{PrimalGraph, TorusInstance, WiredInstance};
use crate::laurent::Coefficient;
use crate::numeric::Rat;

pub const DEFAULT_CAP: usize = 10_000_000;

/// A perfect matching, stored as the sorted list of double-edge ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DimerConfig {
    pub edges: Vec<usize>,
}

impl DimerConfig {
    pub fn weight(&self, d: &DoubleGraph) -> Rat {
        self.edges.iter().map(|&de| d.weight[de].clone()).product()
    }

    /// Checks that every active vertex is covered exactly once.
    pub fn validate(&self, d: &DoubleGraph) -> Result<()> {
        let mut cover = vec![0u32; d.emb.vertex_count()];
        for &de in &self.edges {
            if !d.active_edge(de) {
                return Err(Error::Invariant(format!("dimer on inactive edge {de}")));
            }
            cover[d.black_end(de)] += 1;
            cover[d.white_end(de)] += 1;
        }
        for (v, &c) in cover.iter().enumerate() {
            if !d.removed[v] && c != 1 {
                return Err(Error::Invariant(format!("vertex {v} covered {c} times")));
            }
        }
        Ok(())
    }
}

/// Outgoing half-edge of every vertex (`None` at roots).
pub type OrientedForest = Vec<Option<usize>>;

/// A primal forest and a dual forest; on the plane these are the tree pair `(T, T*)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OcrsfPair {
    pub primal: OrientedForest,
    pub dual: OrientedForest,
}

impl OcrsfPair {
    pub fn weight(&self, p: &PrimalGraph) -> Rat {
        self.primal.iter().flatten().map(|&h| p.half_weight(h).clone()).product()
    }

    pub fn crosses(&self) -> bool {
        let used: Vec<usize> = self.primal.iter().flatten().map(|&h| edge_of(h)).collect();
        self.dual.iter().flatten().any(|&h| used.contains(&edge_of(h)))
    }
}

/// Cycles of a functional graph, each given by its half-edges.
pub fn forest_cycles(emb: &Embedded, f: &OrientedForest) -> Vec<Vec<usize>> {
    let n = f.len();
    let mut state = vec![0u8; n];
    let mut cycles = Vec::new();
    for s in 0..n {
        let mut path = Vec::new();
        let mut v = s;
        while state[v] == 0 {
            state[v] = 1;
            path.push(v);
            match f[v] {
                Some(h) => v = emb.head(h),
                None => break,
            }
        }
        if state[v] == 1 && f[v].is_some() {
            let start = path.iter().position(|&x| x == v).unwrap_or(path.len());
            if start < path.len() {
                cycles.push(path[start..].iter().map(|&x| f[x].unwrap()).collect());
            }
        }
        for x in path {
            state[x] = 2;
        }
    }
    cycles
}

/// Sum of the lattice wraps along a cycle, in units of torus periods.
pub fn cycle_class(emb: &Embedded, cycle: &[usize]) -> [i64; 2] {
    let n = emb.period.unwrap_or(1);
    let mut s = [0i64; 2];
    for &h in cycle {
        let w = emb.wrap(h);
        s[0] += w[0];
        s[1] += w[1];
    }
    [s[0] / n, s[1] / n]
}

/// Matching -> forest pair.
pub fn dimer_to_forest(d: &DoubleGraph, m: &DimerConfig) -> Result<OcrsfPair> {
    m.validate(d)?;
    let mut primal = vec![None; d.nv];
    let mut dual = vec![None; d.nf];
    for &de in &m.edges {
        let e = de / 4;
        match de % 4 {
            TAIL_END => primal[d.black_end(de)] = Some(2 * e),
            HEAD_END => primal[d.black_end(de)] = Some(2 * e + 1),
            LEFT_FACE => dual[d.black_end(de) - d.nv] = Some(2 * e),
            RIGHT_FACE => dual[d.black_end(de) - d.nv] = Some(2 * e + 1),
            _ => unreachable!(),
        }
    }
    Ok(OcrsfPair { primal, dual })
}

/// Forest pair -> matching.
pub fn forest_to_dimer(d: &DoubleGraph, pair: &OcrsfPair) -> Result<DimerConfig> {
    if pair.crosses() {
        return Err(Error::Invariant("primal and dual forests cross".into()));
    }
    let mut edges = Vec::new();
    for (v, h) in pair.primal.iter().enumerate() {
        if let Some(h) = h {
            edges.push(4 * edge_of(*h) + (h & 1));
            debug_assert_eq!(d.black_end(edges[edges.len() - 1]), v);
        }
    }
    for h in pair.dual.iter().flatten() {
        edges.push(4 * edge_of(*h) + LEFT_FACE + (h & 1));
    }
    edges.sort_unstable();
    let m = DimerConfig { edges };
    m.validate(d)?;
    Ok(m)
}

/// Visits every perfect matching in canonical order; returns the number visited.
pub fn for_each_dimer(d: &DoubleGraph, cap: usize, mut visit: impl FnMut(&[usize])) -> Result<usize> {
    let incident: Vec<Vec<usize>> = d
        .white
        .iter()
        .map(|&w| {
            let mut es: Vec<usize> =
                d.emb.rotation[w].iter().map(|&h| edge_of(h)).filter(|&de| d.active_edge(de)).collect();
            es.sort_unstable();
            es
        })
        .collect();
    let mut used = vec![false; d.emb.vertex_count()];
    let mut chosen = Vec::with_capacity(d.white.len());
    let mut count = 0usize;
    fn rec(
        i: usize,
        d: &DoubleGraph,
        incident: &[Vec<usize>],
        used: &mut [bool],
        chosen: &mut Vec<usize>,
        count: &mut usize,
        cap: usize,
        visit: &mut dyn FnMut(&[usize]),
    ) -> Result<()> {
        if i == incident.len() {
            *count += 1;
            if *count > cap {
                return Err(Error::CapExceeded(cap));
            }
            let mut sorted = chosen.clone();
            sorted.sort_unstable();
            visit(&sorted);
            return Ok(());
        }
        for &de in &incident[i] {
            let b = d.black_end(de);
            if used[b] {
                continue;
            }
            used[b] = true;
            chosen.push(de);
            rec(i + 1, d, incident, used, chosen, count, cap, visit)?;
            chosen.pop();
            used[b] = false;
        }
        Ok(())
    }
    rec(0, d, &incident, &mut used, &mut chosen, &mut count, cap, &mut visit)?;
    Ok(count)
}

/// All perfect matchings, sorted lexicographically by edge list.
pub fn enumerate_dimers(d: &DoubleGraph, cap: usize) -> Result<Vec<DimerConfig>> {
    let mut out = Vec::new();
    for_each_dimer(d, cap, |e| out.push(DimerConfig { edges: e.to_vec() }))?;
    out.sort();
    Ok(out)
}

/// `sum_M prod_{e in M} c(e)`.
pub fn dimer_partition_sum(d: &DoubleGraph, cap: usize) -> Result<Rat> {
    let mut z = Rat::from_integer(0.into());
    for_each_dimer(d, cap, |e| {
        let w: Rat = e.iter().map(|&de| d.weight[de].clone()).product();
        z += w;
    })?;
    Ok(z)
}

/// Enumerates functional graphs choosing one half from `choices[v]` at every vertex with
/// choices (vertices without choices are roots). A newly closed cycle is kept iff `keep_cycle`
/// accepts its class.
fn for_each_functional(
    emb: &Embedded,
    choices: &[Vec<usize>],
    keep_cycle: &dyn Fn([i64; 2]) -> bool,
    cap: usize,
    visit: &mut dyn FnMut(&OrientedForest),
) -> Result<usize> {
    let n = choices.len();
    let period = emb.period.unwrap_or(1);
    let mut out: OrientedForest = vec![None; n];
    let mut count = 0;
    fn rec(
        v: usize,
        emb: &Embedded,
        choices: &[Vec<usize>],
        keep_cycle: &dyn Fn([i64; 2]) -> bool,
        period: i64,
        out: &mut OrientedForest,
        count: &mut usize,
        cap: usize,
        visit: &mut dyn FnMut(&OrientedForest),
    ) -> Result<()> {
        let n = choices.len();
        if v == n {
            *count += 1;
            if *count > cap {
                return Err(Error::CapExceeded(cap));
            }
            visit(out);
            return Ok(());
        }
        if choices[v].is_empty() {
            return rec(v + 1, emb, choices, keep_cycle, period, out, count, cap, visit);
        }
        for &h in &choices[v] {
            out[v] = Some(h);
            let mut u = emb.head(h);
            let mut acc = emb.wrap(h);
            let mut steps = 0;
            let mut closed = false;
            while u != v && steps <= n {
                match out[u] {
                    Some(g) => {
                        let w = emb.wrap(g);
                        acc = [acc[0] + w[0], acc[1] + w[1]];
                        u = emb.head(g);
                        steps += 1;
                    }
                    None => break,
                }
            }
            if u == v {
                closed = true;
            }
            if closed && !keep_cycle([acc[0] / period, acc[1] / period]) {
                continue;
            }
            rec(v + 1, emb, choices, keep_cycle, period, out, count, cap, visit)?;
        }
        out[v] = None;
        Ok(())
    }
    rec(0, emb, choices, keep_cycle, period, &mut out, &mut count, cap, visit)?;
    Ok(count)
}

fn outgoing(emb: &Embedded) -> Vec<Vec<usize>> {
    let mut o = vec![Vec::new(); emb.vertex_count()];
    for h in 0..2 * emb.edge_count() {
        o[emb.tail(h)].push(h);
    }
    o
}

/// Oriented cycle-rooted spanning forests of a torus graph (no contractible cycles).
pub fn enumerate_ocrsf(emb: &Embedded, cap: usize) -> Result<Vec<OrientedForest>> {
    let choices = outgoing(emb);
    let mut res = Vec::new();
    for_each_functional(emb, &choices, &|c| c != [0, 0], cap, &mut |f| res.push(f.clone()))?;
    Ok(res)
}

/// Every dual OCRSF not crossing the primal forest `f`.
pub fn duals_of(inst: &TorusInstance, f: &OrientedForest, cap: usize) -> Result<Vec<OrientedForest>> {
    let mut used = vec![false; inst.primal().edge_count()];
    for h in f.iter().flatten() {
        used[edge_of(*h)] = true;
    }
    let choices: Vec<Vec<usize>> =
        outgoing(&inst.dual.emb).into_iter().map(|hs| hs.into_iter().filter(|&h| !used[edge_of(h)]).collect()).collect();
    if choices.iter().any(|c| c.is_empty()) {
        return Ok(Vec::new());
    }
    let mut res = Vec::new();
    for_each_functional(&inst.dual.emb, &choices, &|c| c != [0, 0], cap, &mut |g| res.push(g.clone()))?;
    Ok(res)
}

/// All non-crossing `(F, F*)` pairs of a torus, in canonical order.
pub fn enumerate_ocrsf_pairs(inst: &TorusInstance, cap: usize) -> Result<Vec<OcrsfPair>> {
    let mut pairs = Vec::new();
    for f in enumerate_ocrsf(&inst.primal().emb, cap)? {
        for g in duals_of(inst, &f, cap)? {
            pairs.push(OcrsfPair { primal: f.clone(), dual: g });
            if pairs.len() > cap {
                return Err(Error::CapExceeded(cap));
            }
        }
    }
    pairs.sort();
    Ok(pairs)
}

/// Oriented spanning trees of a wired graph rooted at `r`.
pub fn enumerate_wired_trees(w: &WiredInstance, cap: usize) -> Result<Vec<OrientedForest>> {
    let mut choices = outgoing(&w.primal().emb);
    choices[w.root()].clear();
    let mut res = Vec::new();
    for_each_functional(&w.primal().emb, &choices, &|_| false, cap, &mut |f| res.push(f.clone()))?;
    Ok(res)
}

/// The unique dual tree rooted at `r*` compatible with a primal wired tree.
pub fn dual_tree_of(w: &WiredInstance, t: &OrientedForest) -> Result<OrientedForest> {
    let mut used = vec![false; w.primal().edge_count()];
    for h in t.iter().flatten() {
        used[edge_of(*h)] = true;
    }
    let mut choices: Vec<Vec<usize>> = outgoing(&w.dual.emb)
        .into_iter()
        .map(|hs| hs.into_iter().filter(|&h| !used[edge_of(h)]).collect())
        .collect();
    choices[w.wired.root_face].clear();
    let mut res = Vec::new();
    for_each_functional(&w.dual.emb, &choices, &|_| false, 2, &mut |f| res.push(f.clone()))?;
    match res.len() {
        1 => Ok(res.pop().unwrap()),
        k => Err(Error::Invariant(format!("{k} dual trees compatible with a primal tree"))),
    }
}

/// Checks the oriented-spanning-tree invariants of a wired pair.
pub fn check_tree_pair(w: &WiredInstance, pair: &OcrsfPair) -> Result<()> {
    if !forest_cycles(&w.primal().emb, &pair.primal).is_empty() || !forest_cycles(&w.dual.emb, &pair.dual).is_empty() {
        return Err(Error::Invariant("wired tree pair contains a cycle".into()));
    }
    if pair.primal[w.root()].is_some() || pair.dual[w.wired.root_face].is_some() {
        return Err(Error::Invariant("root carries an outgoing edge".into()));
    }
    if pair.primal.iter().enumerate().any(|(v, h)| v != w.root() && h.is_none()) {
        return Err(Error::Invariant("non-root primal vertex without outgoing edge".into()));
    }
    Ok(())
}

/// Reduces a cycle class to the sign convention `m > 0`, or `m = 0` and `n > 0`.
pub fn normalize_class(c: [i64; 2]) -> Result<[i64; 2]> {
    let g = num_integer::gcd(c[0], c[1]);
    if g != 1 {
        return Err(Error::Invariant(format!("cycle class {c:?} is not primitive")));
    }
    Ok(if c[0] > 0 || (c[0] == 0 && c[1] > 0) { c } else { [-c[0], -c[1]] })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HomologyData {
    pub m: i64,
    pub n: i64,
    pub k: usize,
    pub k1: usize,
    pub k2: usize,
}

/// `(m, n, k, k1, k2)` of a toroidal pair.
pub fn homology_data(inst: &TorusInstance, pair: &OcrsfPair) -> Result<HomologyData> {
    let pc: Vec<[i64; 2]> =
        forest_cycles(&inst.primal().emb, &pair.primal).iter().map(|c| cycle_class(&inst.primal().emb, c)).collect();
    let dc: Vec<[i64; 2]> =
        forest_cycles(&inst.dual.emb, &pair.dual).iter().map(|c| cycle_class(&inst.dual.emb, c)).collect();
    let first = *pc.first().ok_or_else(|| Error::Invariant("forest without cycles".into()))?;
    let class = normalize_class(first)?;
    let neg = [-class[0], -class[1]];
    for c in pc.iter().chain(&dc) {
        if *c != class && *c != neg {
            return Err(Error::Invariant(format!("non-parallel cycles {class:?} and {c:?}")));
        }
    }
    if pc.len() != dc.len() {
        return Err(Error::Invariant(format!("{} primal vs {} dual components", pc.len(), dc.len())));
    }
    Ok(HomologyData {
        m: class[0],
        n: class[1],
        k: pc.len(),
        k1: pc.iter().filter(|&&c| c == class).count(),
        k2: dc.iter().filter(|&&c| c == class).count(),
    })
}

/// One JSON-lines record per configuration.
pub fn dump_configs(inst: &TorusInstance, configs: &[DimerConfig]) -> Result<String> {
    let mut out = String::new();
    for m in configs {
        let pair = dimer_to_forest(&inst.double, m)?;
        let h = homology_data(inst, &pair)?;
        let rec = json!({
            "edges": m.edges,
            "weight": m.weight(&inst.double).to_json(),
            "homology": [h.m, h.n],
            "k": h.k,
            "k1": h.k1,
            "k2": h.k2,
        });
        out.push_str(&rec.to_string());
        out.push('\n');
    }
    Ok(out)
}

/// Total pair weight grouped by primal forest, together with each forest's component count.
pub fn weight_by_primal(inst: &TorusInstance, pairs: &[OcrsfPair]) -> BTreeMap<OrientedForest, (Rat, usize)> {
    let mut map: BTreeMap<OrientedForest, (Rat, usize)> = BTreeMap::new();
    for p in pairs {
        let k = forest_cycles(&inst.primal().emb, &p.primal).len();
        let e = map.entry(p.primal.clone()).or_insert((Rat::from_integer(0.into()), k));
        e.0 += p.weight(inst.primal());
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::PeriodicGraph;
    use crate::numeric::rat;

    #[test]
    fn unit_torus_has_eight_matchings_and_pairs() {
        let t = TorusInstance::new(&PeriodicGraph::uniform_grid(), 1).unwrap();
        assert_eq!(enumerate_dimers(&t.double, DEFAULT_CAP).unwrap().len(), 8);
        assert_eq!(enumerate_ocrsf(&t.primal().emb, DEFAULT_CAP).unwrap().len(), 4);
        assert_eq!(enumerate_ocrsf_pairs(&t, DEFAULT_CAP).unwrap().len(), 8);
        assert_eq!(dimer_partition_sum(&t.double, DEFAULT_CAP).unwrap(), rat(8, 1));
    }

    #[test]
    fn normalize_class_conventions() {
        assert_eq!(normalize_class([-1, 0]).unwrap(), [1, 0]);
        assert_eq!(normalize_class([0, -1]).unwrap(), [0, 1]);
        assert_eq!(normalize_class([-1, 2]).unwrap(), [1, -2]);
        assert!(normalize_class([2, 2]).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let t = TorusInstance::new(&PeriodicGraph::uniform_grid(), 2).unwrap();
        assert!(matches!(enumerate_dimers(&t.double, 3), Err(Error::CapExceeded(3))));
    }

    #[test]
    fn empty_graph_has_one_empty_matching() {
        let t = TorusInstance::new(&PeriodicGraph::uniform_grid(), 1).unwrap();
        let mut d = t.double.clone();
        d.removed = vec![true; d.removed.len()];
        d.black.clear();
        d.white.clear();
        let all = enumerate_dimers(&d, 10).unwrap();
        assert_eq!(all, vec![DimerConfig { edges: vec![] }]);
    }
}
