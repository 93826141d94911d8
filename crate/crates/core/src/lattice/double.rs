//! The bipartite double graph `G^d`.
//!
//! Vertex layout: primal vertices `0..V`, dual vertices `V..V+F`, white vertices `V+F+e` at
//! the midpoint of primal edge `e`. Every double edge runs from its black end to its white
//! end, and the four double edges of primal edge `e` are numbered `4e + k`:
//! `k = 0` tail end, `k = 1` head end, `k = 2` left face, `k = 3` right face.

use super::embedded::{scale, Embedded, EmbeddedEdge, Faces};
use super::quotient::{PrimalGraph, TorusGraph, WiredGraph};
use crate::error::{Error, Result};
use crate::numeric::Rat;

pub const TAIL_END: usize = 0;
pub const HEAD_END: usize = 1;
pub const LEFT_FACE: usize = 2;
pub const RIGHT_FACE: usize = 3;

#[derive(Clone, Debug, Copy, PartialEq, Eq)]
pub enum VertexKind {
    Primal(usize),
    Dual(usize),
    White(usize),
}

#[derive(Clone, Debug)]
pub struct DoubleGraph {
    pub emb: Embedded,
    pub faces: Faces,
    pub nv: usize,
    pub nf: usize,
    pub ne: usize,
    /// Weight of every double edge; dual edges carry weight 1.
    pub weight: Vec<Rat>,
    /// Vertices deleted from the matching problem (the wired `r` and `r*`).
    pub removed: Vec<bool>,
    /// Active black vertices (matrix rows) and active white vertices (matrix columns).
    pub black: Vec<usize>,
    pub white: Vec<usize>,
    pub row_of: Vec<Option<usize>>,
    pub col_of: Vec<Option<usize>>,
}

impl DoubleGraph {
    pub fn kind(&self, v: usize) -> VertexKind {
        if v < self.nv {
            VertexKind::Primal(v)
        } else if v < self.nv + self.nf {
            VertexKind::Dual(v - self.nv)
        } else {
            VertexKind::White(v - self.nv - self.nf)
        }
    }

    pub fn white_of(&self, e: usize) -> usize {
        self.nv + self.nf + e
    }

    pub fn dual_vertex(&self, f: usize) -> usize {
        self.nv + f
    }

    pub fn is_black(&self, v: usize) -> bool {
        v < self.nv + self.nf
    }

    pub fn edge_count(&self) -> usize {
        self.emb.edge_count()
    }

    pub fn black_end(&self, de: usize) -> usize {
        self.emb.edges[de].tail
    }

    pub fn white_end(&self, de: usize) -> usize {
        self.emb.edges[de].head
    }

    /// Double edges usable by dimers (both ends active).
    pub fn active_edge(&self, de: usize) -> bool {
        !self.removed[self.black_end(de)] && !self.removed[self.white_end(de)]
    }

    /// Faces none of whose corners were removed.
    pub fn active_face(&self, f: usize) -> bool {
        self.faces.cycles[f].iter().all(|&h| !self.removed[self.emb.tail(h)])
    }

    pub fn is_balanced(&self) -> bool {
        self.black.len() == self.white.len()
    }
}

fn build(p: &PrimalGraph, removed_vertices: &[usize]) -> Result<DoubleGraph> {
    let nv = p.vertex_count();
    let nf = p.faces.count();
    let ne = p.edge_count();
    let mut pos = p.emb.pos.clone();
    pos.extend_from_slice(&p.faces.bary);
    for e in 0..ne {
        pos.push(p.midpoint(e));
    }
    let mut emb = Embedded {
        pos,
        edges: Vec::with_capacity(4 * ne),
        period: p.emb.period,
        root: p.emb.root,
        rotation: vec![Vec::new(); nv + nf + ne],
    };
    let mut weight = Vec::with_capacity(4 * ne);
    for e in 0..ne {
        let white = nv + nf + e;
        let half = scale(p.emb.disp(2 * e), 0.5);
        let ends = [
            (p.emb.edges[e].tail, half, p.w_fwd[e].clone()),
            (p.emb.edges[e].head, scale(half, -1.0), p.w_bwd[e].clone()),
            (nv + p.left_face(e), p.left_to_mid(e), Rat::from_integer(1.into())),
            (nv + p.right_face(e), p.right_to_mid(e), Rat::from_integer(1.into())),
        ];
        for (tail, disp, w) in ends {
            let wrap = emb.wrap_of(tail, white, disp);
            emb.edges.push(EmbeddedEdge { tail, head: white, disp, wrap });
            weight.push(w);
        }
    }
    for v in 0..nv {
        emb.rotation[v] = p.emb.rotation[v].iter().map(|&h| 2 * (4 * (h >> 1) + (h & 1))).collect();
    }
    for (f, cycle) in p.faces.cycles.iter().enumerate() {
        emb.rotation[nv + f] = cycle.iter().map(|&h| 2 * (4 * (h >> 1) + LEFT_FACE + (h & 1))).collect();
    }
    for e in 0..ne {
        // Counterclockwise from the head direction: head, left face, tail, right face.
        emb.rotation[nv + nf + e] =
            [HEAD_END, LEFT_FACE, TAIL_END, RIGHT_FACE].iter().map(|&k| 2 * (4 * e + k) + 1).collect();
    }
    let faces = emb.faces()?;
    for (f, cycle) in faces.cycles.iter().enumerate() {
        if cycle.len() != 4 {
            return Err(Error::RotationSystem(format!("double-graph face {f} has {} sides", cycle.len())));
        }
    }
    let mut removed = vec![false; nv + nf + ne];
    for &v in removed_vertices {
        removed[v] = true;
    }
    let mut black = Vec::new();
    let mut white = Vec::new();
    let mut row_of = vec![None; nv + nf + ne];
    let mut col_of = vec![None; nv + nf + ne];
    for v in 0..nv + nf + ne {
        if removed[v] {
            continue;
        }
        if v < nv + nf {
            row_of[v] = Some(black.len());
            black.push(v);
        } else {
            col_of[v] = Some(white.len());
            white.push(v);
        }
    }
    Ok(DoubleGraph { emb, faces, nv, nf, ne, weight, removed, black, white, row_of, col_of })
}

/// Double graph of a torus quotient.
pub fn build_double(t: &TorusGraph) -> Result<DoubleGraph> {
    let d = build(&t.primal, &[])?;
    if !d.is_balanced() {
        return Err(Error::Unbalanced { black: d.black.len(), white: d.white.len() });
    }
    Ok(d)
}

/// Double graph of a wired graph with `r` and `r*` removed.
pub fn build_double_wired(w: &WiredGraph) -> Result<DoubleGraph> {
    let nv = w.primal.vertex_count();
    let d = build(&w.primal, &[w.root, nv + w.root_face])?;
    if !d.is_balanced() {
        return Err(Error::Unbalanced { black: d.black.len(), white: d.white.len() });
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::periodic::PeriodicGraph;
    use crate::lattice::quotient::{build_quotient, build_wired};
    use crate::numeric::rat;

    #[test]
    fn unit_torus_double() {
        let t = build_quotient(&PeriodicGraph::uniform_grid(), 1).unwrap();
        let d = build_double(&t).unwrap();
        assert_eq!((d.black.len(), d.white.len(), d.edge_count()), (2, 2, 8));
        assert_eq!(d.faces.count(), 4);
    }

    #[test]
    fn weight_transfer() {
        let mut g = PeriodicGraph::uniform_grid();
        g.edges[0].w_fwd = rat(2, 1);
        g.edges[0].w_bwd = rat(5, 1);
        let t = build_quotient(&g, 1).unwrap();
        let d = build_double(&t).unwrap();
        assert_eq!(d.weight[TAIL_END], rat(2, 1));
        assert_eq!(d.weight[HEAD_END], rat(5, 1));
        assert_eq!(d.weight[LEFT_FACE], rat(1, 1));
    }

    #[test]
    fn wired_removal_balances() {
        for n in 3..6 {
            let w = build_wired(&PeriodicGraph::uniform_grid(), n).unwrap();
            let d = build_double_wired(&w).unwrap();
            assert!(d.is_balanced());
            assert_eq!(d.faces.count(), 2 * w.primal.edge_count());
        }
    }
}
