//! Finite pieces of a periodic graph: the torus quotient, the wired box, and their duals.

use super::embedded::{add, scale, sub, Embedded, EmbeddedEdge, Faces, Vec2};
use super::periodic::PeriodicGraph;
use crate::error::{Error, Result};
use crate::numeric::{rat_to_f64, Rat};

/// A finite embedded primal graph together with its faces and directed weights.
#[derive(Clone, Debug)]
pub struct PrimalGraph {
    pub emb: Embedded,
    pub faces: Faces,
    pub w_fwd: Vec<Rat>,
    pub w_bwd: Vec<Rat>,
    /// Fundamental vertex and lattice copy of every vertex (`None` for the wired root).
    pub vertex_origin: Vec<Option<(usize, [i64; 2])>>,
    /// Fundamental edge and lattice copy of the tail of every edge.
    pub edge_origin: Vec<(usize, [i64; 2])>,
}

impl PrimalGraph {
    pub fn vertex_count(&self) -> usize {
        self.emb.vertex_count()
    }

    pub fn edge_count(&self) -> usize {
        self.emb.edge_count()
    }

    /// Weight of the directed half-edge `h`.
    pub fn half_weight(&self, h: usize) -> &Rat {
        let e = h >> 1;
        if h & 1 == 0 {
            &self.w_fwd[e]
        } else {
            &self.w_bwd[e]
        }
    }

    pub fn half_weight_f64(&self, h: usize) -> f64 {
        rat_to_f64(self.half_weight(h))
    }

    /// Vector from the left face barycentre of primal edge `e` to its midpoint.
    pub fn left_to_mid(&self, e: usize) -> Vec2 {
        sub(scale(self.emb.disp(2 * e), 0.5), self.faces.to_bary(2 * e))
    }

    /// Vector from the right face barycentre of primal edge `e` to its midpoint.
    pub fn right_to_mid(&self, e: usize) -> Vec2 {
        sub(scale(self.emb.disp(2 * e + 1), 0.5), self.faces.to_bary(2 * e + 1))
    }

    pub fn left_face(&self, e: usize) -> usize {
        self.faces.face_of[2 * e]
    }

    pub fn right_face(&self, e: usize) -> usize {
        self.faces.face_of[2 * e + 1]
    }

    pub fn midpoint(&self, e: usize) -> Vec2 {
        add(self.emb.start_point(2 * e), scale(self.emb.disp(2 * e), 0.5))
    }
}

/// The quotient `G / (N Z)^2`.
#[derive(Clone, Debug)]
pub struct TorusGraph {
    pub base: PeriodicGraph,
    pub n: usize,
    pub primal: PrimalGraph,
}

/// The dual of an embedded primal graph: one vertex per face, dual edge `i` crosses primal
/// edge `i` from its left face to its right face, all weights 1.
#[derive(Clone, Debug)]
pub struct DualGraph {
    pub emb: Embedded,
    pub faces: Faces,
}

pub fn copy_index(n: usize, c: [i64; 2]) -> usize {
    (c[1] as usize) * n + c[0] as usize
}

/// Builds the torus quotient of size `n`.
pub fn build_quotient(g: &PeriodicGraph, n: usize) -> Result<TorusGraph> {
    if n == 0 {
        return Err(Error::InvalidSize("torus size must be at least 1".into()));
    }
    let nv0 = g.vertices.len();
    let ni = n as i64;
    let mut pos = Vec::with_capacity(n * n * nv0);
    let mut vertex_origin = Vec::with_capacity(n * n * nv0);
    for j in 0..ni {
        for i in 0..ni {
            for (v, vert) in g.vertices.iter().enumerate() {
                pos.push([vert.pos[0] + i as f64, vert.pos[1] + j as f64]);
                vertex_origin.push(Some((v, [i, j])));
            }
        }
    }
    let mut emb = Embedded { pos, edges: Vec::new(), period: Some(ni), root: None, rotation: Vec::new() };
    let mut w_fwd = Vec::new();
    let mut w_bwd = Vec::new();
    let mut edge_origin = Vec::new();
    for j in 0..ni {
        for i in 0..ni {
            for (k, e) in g.edges.iter().enumerate() {
                let hc = [(i + e.offset[0]).rem_euclid(ni), (j + e.offset[1]).rem_euclid(ni)];
                let tail = copy_index(n, [i, j]) * nv0 + e.tail;
                let head = copy_index(n, hc) * nv0 + e.head;
                let disp = g.lifted_disp(e);
                let wrap = emb.wrap_of(tail, head, disp);
                emb.edges.push(EmbeddedEdge { tail, head, disp, wrap });
                w_fwd.push(e.w_fwd.clone());
                w_bwd.push(e.w_bwd.clone());
                edge_origin.push((k, [i, j]));
            }
        }
    }
    emb.rotation_from_angles()?;
    let faces = emb.faces()?;
    let chi = emb.euler_characteristic(&faces);
    if chi != 0 {
        return Err(Error::RotationSystem(format!("torus quotient has Euler characteristic {chi}")));
    }
    Ok(TorusGraph {
        base: g.clone(),
        n,
        primal: PrimalGraph { emb, faces, w_fwd, w_bwd, vertex_origin, edge_origin },
    })
}

/// Builds the dual of a primal graph (torus or wired sphere).
pub fn build_dual(p: &PrimalGraph) -> Result<DualGraph> {
    let nf = p.faces.count();
    let mut emb = Embedded {
        pos: p.faces.bary.clone(),
        edges: Vec::with_capacity(p.edge_count()),
        period: p.emb.period,
        root: None,
        rotation: vec![Vec::new(); nf],
    };
    for e in 0..p.edge_count() {
        let tail = p.left_face(e);
        let head = p.right_face(e);
        let disp = sub(p.left_to_mid(e), p.right_to_mid(e));
        let wrap = emb.wrap_of(tail, head, disp);
        emb.edges.push(EmbeddedEdge { tail, head, disp, wrap });
    }
    for (f, cycle) in p.faces.cycles.iter().enumerate() {
        // Crossing the boundary in traversal order walks counterclockwise around the face.
        emb.rotation[f] = cycle.to_vec();
    }
    let faces = emb.faces()?;
    let chi = emb.euler_characteristic(&faces);
    let expected = if p.emb.period.is_some() { 0 } else { 2 };
    if chi != expected {
        return Err(Error::RotationSystem(format!("dual has Euler characteristic {chi}, expected {expected}")));
    }
    Ok(DualGraph { emb, faces })
}

/// `N x N` box of fundamental copies whose outer ring of copies is glued into one root.
#[derive(Clone, Debug)]
pub struct WiredGraph {
    pub base: PeriodicGraph,
    pub n: usize,
    pub primal: PrimalGraph,
    /// The merged boundary vertex `r` (always the last vertex).
    pub root: usize,
    /// The dual vertex `r*` removed together with `r`.
    pub root_face: usize,
}

/// Builds the wired graph with `r*` the lowest-id face incident to `r`.
pub fn build_wired(g: &PeriodicGraph, n: usize) -> Result<WiredGraph> {
    build_wired_with_root_face(g, n, None)
}

pub fn build_wired_with_root_face(g: &PeriodicGraph, n: usize, root_face: Option<usize>) -> Result<WiredGraph> {
    if n < 2 {
        return Err(Error::InvalidSize("wired box size must be at least 2".into()));
    }
    if g.edges.iter().any(|e| e.offset[0].abs() > 1 || e.offset[1].abs() > 1) {
        return Err(Error::InvalidSize("wired boxes need edge offsets in {-1, 0, 1}".into()));
    }
    let nv0 = g.vertices.len();
    let ni = n as i64;
    let interior = |c: [i64; 2]| c[0] >= 1 && c[0] <= ni - 2 && c[1] >= 1 && c[1] <= ni - 2;
    let mut index = vec![usize::MAX; n * n * nv0];
    let mut pos = Vec::new();
    let mut vertex_origin = Vec::new();
    for j in 1..ni - 1 {
        for i in 1..ni - 1 {
            for (v, vert) in g.vertices.iter().enumerate() {
                index[copy_index(n, [i, j]) * nv0 + v] = pos.len();
                pos.push([vert.pos[0] + i as f64, vert.pos[1] + j as f64]);
                vertex_origin.push(Some((v, [i, j])));
            }
        }
    }
    let root = pos.len();
    pos.push([ni as f64 / 2.0, ni as f64 / 2.0]);
    vertex_origin.push(None);
    let mut emb = Embedded { pos, edges: Vec::new(), period: None, root: Some(root), rotation: Vec::new() };
    let mut w_fwd = Vec::new();
    let mut w_bwd = Vec::new();
    let mut edge_origin = Vec::new();
    for j in 0..ni {
        for i in 0..ni {
            for (k, e) in g.edges.iter().enumerate() {
                let hc = [i + e.offset[0], j + e.offset[1]];
                let tin = interior([i, j]);
                let hin = interior(hc);
                if !tin && !hin {
                    continue;
                }
                let tail = if tin { index[copy_index(n, [i, j]) * nv0 + e.tail] } else { root };
                let head = if hin { index[copy_index(n, hc) * nv0 + e.head] } else { root };
                emb.edges.push(EmbeddedEdge { tail, head, disp: g.lifted_disp(e), wrap: [0, 0] });
                w_fwd.push(e.w_fwd.clone());
                w_bwd.push(e.w_bwd.clone());
                edge_origin.push((k, [i, j]));
            }
        }
    }
    if emb.edges.is_empty() {
        return Err(Error::InvalidSize(format!("a {n}x{n} wired box has no interior vertices")));
    }
    emb.rotation_from_angles()?;
    emb.rotation[root] = root_rotation(&emb, root);
    let faces = emb.faces()?;
    let chi = emb.euler_characteristic(&faces);
    if chi != 2 {
        return Err(Error::RotationSystem(format!("wired graph has Euler characteristic {chi}")));
    }
    let incident: Vec<usize> = {
        let mut f: Vec<usize> = emb.rotation[root].iter().map(|&h| faces.face_of[h]).collect();
        f.sort_unstable();
        f.dedup();
        f
    };
    let root_face = match root_face {
        None => incident[0],
        Some(f) if incident.contains(&f) => f,
        Some(f) => return Err(Error::InvalidInput(format!("face {f} is not incident to the root"))),
    };
    Ok(WiredGraph {
        base: g.clone(),
        n,
        primal: PrimalGraph { emb, faces, w_fwd, w_bwd, vertex_origin, edge_origin },
        root,
        root_face,
    })
}

/// Rotation at the point at infinity: clockwise around the box, ties broken by the local
/// counterclockwise order at the shared boundary vertex.
fn root_rotation(emb: &Embedded, root: usize) -> Vec<usize> {
    let center = emb.pos[root];
    let mut halves: Vec<(f64, f64, usize)> = (0..2 * emb.edge_count())
        .filter(|&h| emb.tail(h) == root)
        .map(|h| {
            let p = emb.start_point(h);
            let outward = sub(p, center);
            let global = outward[1].atan2(outward[0]);
            let local = super::embedded::ccw_angle(outward, emb.disp(h));
            (-global, local, h)
        })
        .collect();
    halves.sort_by(|a, b| {
        let ga = (a.0 * 1e9).round();
        let gb = (b.0 * 1e9).round();
        ga.total_cmp(&gb).then(a.1.total_cmp(&b.1))
    });
    halves.into_iter().map(|t| t.2).collect()
}

impl WiredGraph {
    /// Interior (non-root) vertex count.
    pub fn interior_count(&self) -> usize {
        self.root
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    fn drifted() -> PeriodicGraph {
        PeriodicGraph::drifted_grid(rat(1, 1), rat(2, 1), rat(3, 1), rat(4, 1))
    }

    #[test]
    fn quotient_counts() {
        let u = PeriodicGraph::uniform_grid();
        let t1 = build_quotient(&u, 1).unwrap();
        assert_eq!((t1.primal.vertex_count(), t1.primal.edge_count()), (1, 2));
        let t2 = build_quotient(&u, 2).unwrap();
        assert_eq!((t2.primal.vertex_count(), t2.primal.edge_count(), t2.primal.faces.count()), (4, 8, 4));
        assert!(build_quotient(&u, 0).is_err());
    }

    #[test]
    fn quotient_projects_weights() {
        let g = drifted();
        let t = build_quotient(&g, 3).unwrap();
        assert_eq!(t.primal.vertex_count(), 9);
        assert_eq!(t.primal.edge_count(), 18);
        for (e, &(k, _)) in t.primal.edge_origin.iter().enumerate() {
            assert_eq!(t.primal.w_fwd[e], g.edges[k].w_fwd);
            assert_eq!(t.primal.w_bwd[e], g.edges[k].w_bwd);
        }
    }

    #[test]
    fn dual_of_square_torus() {
        let t = build_quotient(&drifted(), 2).unwrap();
        let d = build_dual(&t.primal).unwrap();
        assert_eq!(d.emb.vertex_count(), 4);
        assert_eq!(d.emb.edge_count(), 8);
        assert_eq!(d.faces.count(), 4);
        for r in &d.emb.rotation {
            assert_eq!(r.len(), 4);
        }
    }

    #[test]
    fn dual_of_unit_torus() {
        let t = build_quotient(&PeriodicGraph::uniform_grid(), 1).unwrap();
        let d = build_dual(&t.primal).unwrap();
        assert_eq!((d.emb.vertex_count(), d.emb.edge_count()), (1, 2));
    }

    #[test]
    fn wired_counts() {
        let w3 = build_wired(&PeriodicGraph::uniform_grid(), 3).unwrap();
        assert_eq!(w3.interior_count(), 1);
        assert_eq!(w3.primal.edge_count(), 4);
        let w4 = build_wired(&drifted(), 4).unwrap();
        assert_eq!(w4.interior_count(), 4);
        let total: Rat = (0..2 * w4.primal.edge_count())
            .filter(|&h| w4.primal.emb.tail(h) == 0)
            .map(|h| w4.primal.half_weight(h).clone())
            .sum();
        assert_eq!(total, rat(10, 1));
        assert!(build_wired(&drifted(), 1).is_err());
    }

    #[test]
    fn wired_dual_is_spherical() {
        for n in 3..6 {
            let w = build_wired(&drifted(), n).unwrap();
            build_dual(&w.primal).unwrap();
        }
    }
}
