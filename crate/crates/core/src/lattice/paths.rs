//! Reference dual cycles `gamma_x`, `gamma_y` and the monomial markings they induce.

use std::collections::{HashMap, VecDeque};

use super::double::{DoubleGraph, LEFT_FACE, RIGHT_FACE};
use super::embedded::{edge_of, rev, Embedded};
use super::quotient::{DualGraph, TorusGraph};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct DualPaths {
    /// Dual half-edges of `gamma_x` and `gamma_y` (dual half `2e` runs left face to right face of `e`).
    pub gamma: [Vec<usize>; 2],
    /// Crossed primal edges with sign `+1` when the primal edge runs from the left of the path to its right.
    pub primal_crossings: [Vec<(usize, i32)>; 2],
    /// Exponents `(p, q)` of `z^p w^q` on every double edge.
    pub marking: Vec<[i32; 2]>,
}

impl DualPaths {
    pub fn crosses(&self, e: usize) -> bool {
        self.primal_crossings.iter().any(|c| c.iter().any(|&(x, _)| x == e))
    }
}

/// Shortest simple cycle with homology `class`, canonical under lowest-id tie-breaking.
pub fn shortest_cycle(emb: &Embedded, n: i64, class: [i64; 2]) -> Result<Vec<usize>> {
    let nf = emb.vertex_count();
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); nf];
    for h in 0..2 * emb.edge_count() {
        outgoing[emb.tail(h)].push(h);
    }
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    for start in 0..nf {
        let mut prev: HashMap<(usize, [i64; 2]), usize> = HashMap::new();
        let mut queue = VecDeque::new();
        let origin = (start, [0i64, 0]);
        let target = (start, class);
        prev.insert(origin, usize::MAX);
        queue.push_back(origin);
        let mut found = false;
        while let Some((f, lift)) = queue.pop_front() {
            if (f, lift) == target {
                found = true;
                break;
            }
            for &h in &outgoing[f] {
                let w = emb.wrap(h);
                let next = (emb.head(h), [lift[0] + w[0] / n, lift[1] + w[1] / n]);
                if next.1[0].abs() > 4 || next.1[1].abs() > 4 || prev.contains_key(&next) {
                    continue;
                }
                prev.insert(next, h);
                queue.push_back(next);
            }
        }
        if !found {
            continue;
        }
        let mut path = Vec::new();
        let mut state = target;
        loop {
            let h = prev[&state];
            if h == usize::MAX {
                break;
            }
            path.push(h);
            let w = emb.wrap(h);
            state = (emb.tail(h), [state.1[0] - w[0] / n, state.1[1] - w[1] / n]);
        }
        path.reverse();
        candidates.push(path);
    }
    candidates.sort_by_key(|p| p.len());
    for p in candidates {
        let mut seen: Vec<usize> = p.iter().map(|&h| emb.tail(h)).collect();
        seen.sort_unstable();
        let len = seen.len();
        seen.dedup();
        if seen.len() == len {
            return Ok(p);
        }
    }
    Err(Error::Invariant(format!("no simple dual cycle of class {class:?}")))
}

/// Double-graph half-edges traced by a dual half-edge.
fn lift_to_double(dual_half: usize) -> [usize; 2] {
    let e = dual_half >> 1;
    if dual_half & 1 == 0 {
        [2 * (4 * e + LEFT_FACE), 2 * (4 * e + RIGHT_FACE) + 1]
    } else {
        [2 * (4 * e + RIGHT_FACE), 2 * (4 * e + LEFT_FACE) + 1]
    }
}

/// Chooses `gamma_x`, `gamma_y` and derives the double-graph markings.
pub fn choose_dual_paths(t: &TorusGraph, dual: &DualGraph, d: &DoubleGraph) -> Result<DualPaths> {
    let n = t.n as i64;
    let gamma = [shortest_cycle(&dual.emb, n, [1, 0])?, shortest_cycle(&dual.emb, n, [0, 1])?];
    let slot = d.emb.slot_in_rotation();
    let mut marking = vec![[0i32; 2]; d.edge_count()];
    let mut primal_crossings: [Vec<(usize, i32)>; 2] = [Vec::new(), Vec::new()];
    for (axis, path) in gamma.iter().enumerate() {
        for &h in path {
            primal_crossings[axis].push((h >> 1, if h & 1 == 0 { -1 } else { 1 }));
        }
        let halves: Vec<usize> = path.iter().flat_map(|&h| lift_to_double(h)).collect();
        for k in 0..halves.len() {
            let out = halves[k];
            let back = rev(halves[(k + halves.len() - 1) % halves.len()]);
            let x = d.emb.tail(out);
            let rot = &d.emb.rotation[x];
            let exponent = if d.is_black(x) { -1 } else { 1 };
            let mut i = (slot[out] + 1) % rot.len();
            while rot[i] != back {
                marking[edge_of(rot[i])][axis] += exponent;
                i = (i + 1) % rot.len();
            }
        }
    }
    Ok(DualPaths { gamma, primal_crossings, marking })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::double::build_double;
    use crate::lattice::periodic::PeriodicGraph;
    use crate::lattice::quotient::{build_dual, build_quotient};

    fn paths(n: usize) -> (TorusGraph, DualPaths) {
        let t = build_quotient(&PeriodicGraph::uniform_grid(), n).unwrap();
        let dual = build_dual(&t.primal).unwrap();
        let d = build_double(&t).unwrap();
        let p = choose_dual_paths(&t, &dual, &d).unwrap();
        (t, p)
    }

    #[test]
    fn unit_torus_paths_cross_one_edge() {
        let (t, p) = paths(1);
        for axis in 0..2 {
            assert_eq!(p.gamma[axis].len(), 1);
            let (e, _) = p.primal_crossings[axis][0];
            // gamma_x crosses the vertical edge, gamma_y the horizontal one.
            let wrap = t.primal.emb.edges[e].wrap;
            assert_eq!(wrap[1 - axis].abs(), 1);
        }
    }

    #[test]
    fn paths_cross_n_edges_with_unit_intersection() {
        for n in 1..4 {
            let (t, p) = paths(n);
            // Primal cycles along row 0 (class (1,0)) and column 0 (class (0,1)).
            let row: Vec<usize> = (0..n).map(|i| 2 * i).collect();
            let column: Vec<usize> = (0..n).map(|j| 2 * j * n + 1).collect();
            for axis in 0..2 {
                assert_eq!(p.gamma[axis].len(), n);
                let meet = |cycle: &[usize]| -> i32 {
                    p.primal_crossings[axis].iter().filter(|(e, _)| cycle.contains(e)).map(|&(_, s)| s).sum()
                };
                let (same, other) = if axis == 0 { (&row, &column) } else { (&column, &row) };
                assert_eq!(meet(same), 0);
                assert_eq!(meet(other).abs(), 1);
            }
            assert!(t.primal.edge_count() == 2 * n * n);
        }
    }
}
