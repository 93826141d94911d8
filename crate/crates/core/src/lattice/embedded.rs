//! Straight-line embedded multigraphs on the torus or the (wired) plane.
//!
//! Edges are stored once with a tail, a head and the lifted displacement vector from tail to
//! head. A half-edge `h` is `2 * edge + dir`, where `dir == 0` runs tail to head and `dir == 1`
//! runs head to tail. All downstream code indexes edges and half-edges, never vertex pairs,
//! so loops and parallel edges of small quotients are handled uniformly.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn scale(a: Vec2, s: f64) -> Vec2 {
    [a[0] * s, a[1] * s]
}

pub fn angle(a: Vec2) -> f64 {
    a[1].atan2(a[0])
}

/// Counterclockwise angle from direction `from` to direction `to`, in `[0, 2pi)`.
pub fn ccw_angle(from: Vec2, to: Vec2) -> f64 {
    let mut d = angle(to) - angle(from);
    while d < 0.0 {
        d += 2.0 * PI;
    }
    while d >= 2.0 * PI {
        d -= 2.0 * PI;
    }
    d
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedEdge {
    pub tail: usize,
    pub head: usize,
    /// Lifted displacement from tail to head.
    pub disp: Vec2,
    /// Number of torus periods (in fundamental-lattice units) crossed by the lifted edge.
    pub wrap: [i64; 2],
}

#[derive(Clone, Debug)]
pub struct Embedded {
    pub pos: Vec<Vec2>,
    pub edges: Vec<EmbeddedEdge>,
    /// Torus size `N` in fundamental-lattice units, `None` for planar graphs.
    pub period: Option<i64>,
    /// Vertex without a position (the wired root at infinity).
    pub root: Option<usize>,
    /// Outgoing half-edges of every vertex in counterclockwise order.
    pub rotation: Vec<Vec<usize>>,
}

#[inline]
pub fn rev(h: usize) -> usize {
    h ^ 1
}

#[inline]
pub fn edge_of(h: usize) -> usize {
    h >> 1
}

#[inline]
pub fn is_backward(h: usize) -> bool {
    h & 1 == 1
}

impl Embedded {
    pub fn vertex_count(&self) -> usize {
        self.pos.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn tail(&self, h: usize) -> usize {
        let e = &self.edges[edge_of(h)];
        if is_backward(h) {
            e.head
        } else {
            e.tail
        }
    }

    pub fn head(&self, h: usize) -> usize {
        self.tail(rev(h))
    }

    pub fn disp(&self, h: usize) -> Vec2 {
        let d = self.edges[edge_of(h)].disp;
        if is_backward(h) {
            scale(d, -1.0)
        } else {
            d
        }
    }

    pub fn wrap(&self, h: usize) -> [i64; 2] {
        let w = self.edges[edge_of(h)].wrap;
        if is_backward(h) {
            [-w[0], -w[1]]
        } else {
            w
        }
    }

    /// Geometric starting point of a half-edge (for the root this is the boundary point of the ray).
    pub fn start_point(&self, h: usize) -> Vec2 {
        let t = self.tail(h);
        if Some(t) == self.root {
            sub(self.pos[self.head(h)], self.disp(h))
        } else {
            self.pos[t]
        }
    }

    /// Fills `rotation` by sorting outgoing half-edges by the angle of their displacement.
    pub fn rotation_from_angles(&mut self) -> Result<()> {
        let mut rot: Vec<Vec<usize>> = vec![Vec::new(); self.pos.len()];
        for h in 0..2 * self.edges.len() {
            rot[self.tail(h)].push(h);
        }
        for (v, halves) in rot.iter_mut().enumerate() {
            if Some(v) == self.root {
                continue;
            }
            halves.sort_by(|&a, &b| angle(self.disp(a)).total_cmp(&angle(self.disp(b))));
            for w in halves.windows(2) {
                if (angle(self.disp(w[0])) - angle(self.disp(w[1]))).abs() < 1e-12 {
                    return Err(Error::RotationSystem(format!(
                        "two edges leave vertex {v} in the same direction"
                    )));
                }
            }
        }
        self.rotation = rot;
        Ok(())
    }

    pub fn slot_in_rotation(&self) -> Vec<usize> {
        let mut slot = vec![usize::MAX; 2 * self.edges.len()];
        for halves in &self.rotation {
            for (i, &h) in halves.iter().enumerate() {
                slot[h] = i;
            }
        }
        slot
    }

    /// Half-edge following `h` along the face on its left.
    fn next_in_face(&self, h: usize, slot: &[usize]) -> usize {
        let back = rev(h);
        let v = self.tail(back);
        let halves = &self.rotation[v];
        let i = slot[back];
        halves[(i + halves.len() - 1) % halves.len()]
    }

    /// Traces every face (each face keeps its boundary on the left of the traversal).
    pub fn faces(&self) -> Result<Faces> {
        let nh = 2 * self.edges.len();
        let slot = self.slot_in_rotation();
        if slot.iter().any(|&s| s == usize::MAX) {
            return Err(Error::RotationSystem("half-edge missing from rotation".into()));
        }
        let mut face_of = vec![usize::MAX; nh];
        let mut index_in_face = vec![0; nh];
        let mut cycles = Vec::new();
        for start in 0..nh {
            if face_of[start] != usize::MAX {
                continue;
            }
            let f = cycles.len();
            let mut cycle = Vec::new();
            let mut h = start;
            loop {
                if face_of[h] != usize::MAX {
                    return Err(Error::RotationSystem(format!("face tracing revisited half-edge {h}")));
                }
                face_of[h] = f;
                index_in_face[h] = cycle.len();
                cycle.push(h);
                h = self.next_in_face(h, &slot);
                if h == start {
                    break;
                }
            }
            cycles.push(cycle);
        }
        let mut corner = vec![[0.0; 2]; nh];
        let mut bary = Vec::with_capacity(cycles.len());
        for cycle in &cycles {
            let mut p = self.start_point(cycle[0]);
            let mut acc = [0.0; 2];
            let mut closure = [0.0; 2];
            for &h in cycle {
                let here = if self.period.is_some() { p } else { self.start_point(h) };
                corner[h] = here;
                acc = add(acc, here);
                p = add(here, self.disp(h));
                closure = add(closure, self.disp(h));
            }
            if self.period.is_some() && (closure[0].abs() > 1e-6 || closure[1].abs() > 1e-6) {
                return Err(Error::RotationSystem("a face boundary winds around the torus".into()));
            }
            bary.push(scale(acc, 1.0 / cycle.len() as f64));
        }
        Ok(Faces { cycles, face_of, index_in_face, corner, bary })
    }

    /// `V - E + F`.
    pub fn euler_characteristic(&self, faces: &Faces) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + faces.cycles.len() as i64
    }

    /// Lattice translation (in fundamental units) between the lifts of the two endpoints.
    pub fn wrap_of(&self, tail: usize, head: usize, disp: Vec2) -> [i64; 2] {
        match self.period {
            None => [0, 0],
            Some(_) => {
                let d = sub(add(self.pos[tail], disp), self.pos[head]);
                [d[0].round() as i64, d[1].round() as i64]
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Faces {
    /// Boundary half-edges of every face, in traversal order.
    pub cycles: Vec<Vec<usize>>,
    pub face_of: Vec<usize>,
    pub index_in_face: Vec<usize>,
    /// Start point of every half-edge within the canonical lift of its face.
    pub corner: Vec<Vec2>,
    /// Barycentre of every face within its canonical lift.
    pub bary: Vec<Vec2>,
}

impl Faces {
    pub fn count(&self) -> usize {
        self.cycles.len()
    }

    /// Vector from the start of `h` to the barycentre of the face on its left.
    pub fn to_bary(&self, h: usize) -> Vec2 {
        sub(self.bary[self.face_of[h]], self.corner[h])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_torus() -> Embedded {
        let mut g = Embedded {
            pos: vec![[0.0, 0.0]],
            edges: vec![
                EmbeddedEdge { tail: 0, head: 0, disp: [1.0, 0.0], wrap: [1, 0] },
                EmbeddedEdge { tail: 0, head: 0, disp: [0.0, 1.0], wrap: [0, 1] },
            ],
            period: Some(1),
            root: None,
            rotation: vec![],
        };
        g.rotation_from_angles().unwrap();
        g
    }

    #[test]
    fn single_square_face_on_unit_torus() {
        let g = unit_torus();
        let f = g.faces().unwrap();
        assert_eq!(f.count(), 1);
        assert_eq!(g.euler_characteristic(&f), 0);
        assert_eq!(f.cycles[0].len(), 4);
        assert!((f.bary[0][0] - 0.5).abs() < 1e-12 && (f.bary[0][1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ccw_angle_range() {
        assert!((ccw_angle([1.0, 0.0], [0.0, 1.0]) - PI / 2.0).abs() < 1e-12);
        assert!((ccw_angle([0.0, 1.0], [1.0, 0.0]) - 1.5 * PI).abs() < 1e-12);
    }
}
