//! Z^2-periodic weighted directed planar graphs and the JSON graph-spec document.

use std::collections::HashMap;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::embedded::{sub, Embedded, EmbeddedEdge, Vec2};
use crate::error::{Error, Result};
use crate::numeric::{format_rational, parse_rational, rat_to_f64, Rat};

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicVertex {
    pub id: String,
    pub pos: Vec2,
}

/// An undirected edge carrying the two directed weights `c(tail -> head)` and `c(head -> tail)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicEdge {
    pub tail: usize,
    pub head: usize,
    /// Lattice translation of the head copy relative to the tail copy.
    pub offset: [i64; 2],
    pub w_fwd: Rat,
    pub w_bwd: Rat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicGraph {
    pub name: String,
    pub vertices: Vec<PeriodicVertex>,
    pub edges: Vec<PeriodicEdge>,
    /// True when some weight was given as a `"p/q"` string.
    pub rational_input: bool,
}

#[derive(Deserialize, Serialize)]
struct SpecDoc {
    name: String,
    vertices: Vec<SpecVertex>,
    edges: Vec<SpecEdge>,
}

#[derive(Deserialize, Serialize)]
struct SpecVertex {
    id: String,
    pos: [f64; 2],
}

#[derive(Deserialize, Serialize)]
struct SpecEdge {
    tail: String,
    head: String,
    offset: [i64; 2],
    w_fwd: Value,
    w_bwd: Value,
}

fn parse_weight(v: &Value, what: &str) -> Result<(Rat, bool)> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok((Rat::from_integer(i.into()), false))
            } else {
                let f = n.as_f64().ok_or_else(|| Error::Schema(format!("{what}: bad number")))?;
                let r = Rat::from_float(f).ok_or_else(|| Error::Schema(format!("{what}: non-finite weight")))?;
                Ok((r, false))
            }
        }
        Value::String(s) => parse_rational(s)
            .map(|r| (r, true))
            .ok_or_else(|| Error::Schema(format!("{what}: cannot parse weight {s:?}"))),
        _ => Err(Error::Schema(format!("{what}: weight must be a number or \"p/q\" string"))),
    }
}

/// Parses and validates a graph-spec document.
pub fn parse_graph_spec(text: &str) -> Result<PeriodicGraph> {
    let doc: SpecDoc = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let mut index = HashMap::new();
    let mut vertices = Vec::new();
    for v in &doc.vertices {
        if !v.pos.iter().all(|x| x.is_finite()) {
            return Err(Error::Schema(format!("vertex {}: non-finite position", v.id)));
        }
        if index.insert(v.id.clone(), vertices.len()).is_some() {
            return Err(Error::Schema(format!("duplicate vertex id {}", v.id)));
        }
        vertices.push(PeriodicVertex { id: v.id.clone(), pos: v.pos });
    }
    let mut rational_input = false;
    let mut edges = Vec::new();
    for (k, e) in doc.edges.iter().enumerate() {
        let what = format!("edges[{k}]");
        let lookup = |id: &str| {
            index.get(id).copied().ok_or_else(|| Error::Schema(format!("{what}: unknown vertex {id}")))
        };
        let (w_fwd, r1) = parse_weight(&e.w_fwd, &what)?;
        let (w_bwd, r2) = parse_weight(&e.w_bwd, &what)?;
        rational_input |= r1 || r2;
        edges.push(PeriodicEdge { tail: lookup(&e.tail)?, head: lookup(&e.head)?, offset: e.offset, w_fwd, w_bwd });
    }
    let g = PeriodicGraph { name: doc.name, vertices, edges, rational_input };
    g.validate()?;
    Ok(g)
}

/// Renders the graph back into the graph-spec document format.
pub fn to_graph_spec(g: &PeriodicGraph) -> String {
    let doc = SpecDoc {
        name: g.name.clone(),
        vertices: g.vertices.iter().map(|v| SpecVertex { id: v.id.clone(), pos: v.pos }).collect(),
        edges: g
            .edges
            .iter()
            .map(|e| SpecEdge {
                tail: g.vertices[e.tail].id.clone(),
                head: g.vertices[e.head].id.clone(),
                offset: e.offset,
                w_fwd: Value::String(format_rational(&e.w_fwd)),
                w_bwd: Value::String(format_rational(&e.w_bwd)),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("spec serialises")
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    let u = sub(b, a);
    let v = sub(c, a);
    u[0] * v[1] - u[1] * v[0]
}

fn close(a: Vec2, b: Vec2) -> bool {
    (a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9
}

fn on_segment(p: Vec2, a: Vec2, b: Vec2) -> bool {
    orient(a, b, p).abs() < 1e-9
        && p[0] >= a[0].min(b[0]) - 1e-9
        && p[0] <= a[0].max(b[0]) + 1e-9
        && p[1] >= a[1].min(b[1]) - 1e-9
        && p[1] <= a[1].max(b[1]) + 1e-9
}

/// True when two closed segments meet anywhere other than at a shared endpoint.
fn segments_conflict(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if d1 * d2 < -1e-18 && d3 * d4 < -1e-18 && d1.abs() > 1e-9 && d2.abs() > 1e-9 && d3.abs() > 1e-9 && d4.abs() > 1e-9 {
        return true;
    }
    let shared = |x: Vec2| close(x, q1) || close(x, q2);
    if d1.abs() < 1e-9 && d2.abs() < 1e-9 {
        // Collinear: conflict on any overlap of positive length.
        let axis = if (p2[0] - p1[0]).abs() > (p2[1] - p1[1]).abs() { 0 } else { 1 };
        let (a0, a1) = (p1[axis].min(p2[axis]), p1[axis].max(p2[axis]));
        let (b0, b1) = (q1[axis].min(q2[axis]), q1[axis].max(q2[axis]));
        return a1.min(b1) - a0.max(b0) > 1e-9;
    }
    for (x, a, b) in [(p1, q1, q2), (p2, q1, q2)] {
        if !shared(x) && on_segment(x, a, b) {
            return true;
        }
    }
    for (x, a, b) in [(q1, p1, p2), (q2, p1, p2)] {
        if !(close(x, p1) || close(x, p2)) && on_segment(x, a, b) {
            return true;
        }
    }
    false
}

impl PeriodicGraph {
    /// Square lattice whose vertices carry conductances `a, b, c, d` clockwise from the right.
    pub fn drifted_grid(a: Rat, b: Rat, c: Rat, d: Rat) -> Self {
        PeriodicGraph {
            name: "drifted square grid".into(),
            vertices: vec![PeriodicVertex { id: "v".into(), pos: [0.0, 0.0] }],
            edges: vec![
                PeriodicEdge { tail: 0, head: 0, offset: [1, 0], w_fwd: a, w_bwd: c },
                PeriodicEdge { tail: 0, head: 0, offset: [0, 1], w_fwd: d, w_bwd: b },
            ],
            rational_input: true,
        }
    }

    pub fn uniform_grid() -> Self {
        let one = Rat::from_integer(1.into());
        let mut g = Self::drifted_grid(one.clone(), one.clone(), one.clone(), one);
        g.name = "uniform square grid".into();
        g
    }

    pub fn edge_label(&self, k: usize) -> String {
        let e = &self.edges[k];
        format!("edges[{k}] ({}->{} {:?})", self.vertices[e.tail].id, self.vertices[e.head].id, e.offset)
    }

    /// Lifted segment of edge `k` translated by `t`.
    fn segment(&self, k: usize, t: [i64; 2]) -> (Vec2, Vec2) {
        let e = &self.edges[k];
        let a = self.vertices[e.tail].pos;
        let b = self.vertices[e.head].pos;
        (
            [a[0] + t[0] as f64, a[1] + t[1] as f64],
            [b[0] + (e.offset[0] + t[0]) as f64, b[1] + (e.offset[1] + t[1]) as f64],
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices.is_empty() || self.edges.is_empty() {
            return Err(Error::Schema("graph needs at least one vertex and one edge".into()));
        }
        for (k, e) in self.edges.iter().enumerate() {
            if e.w_fwd.is_negative() || e.w_bwd.is_negative() {
                return Err(Error::NegativeWeight { edge: self.edge_label(k) });
            }
            if e.tail == e.head && e.offset == [0, 0] {
                return Err(Error::Schema(format!("{}: contractible loop", self.edge_label(k))));
            }
        }
        self.check_planar()?;
        self.check_connected()?;
        // Face structure of the unit quotient must be that of a torus.
        let unit = self.unit_embedding()?;
        let faces = unit.faces()?;
        if unit.euler_characteristic(&faces) != 0 {
            return Err(Error::RotationSystem(format!(
                "unit quotient has Euler characteristic {}",
                unit.euler_characteristic(&faces)
            )));
        }
        Ok(())
    }

    fn check_planar(&self) -> Result<()> {
        let reach = self.edges.iter().map(|e| e.offset[0].abs().max(e.offset[1].abs())).max().unwrap_or(0) + 1;
        for k in 0..self.edges.len() {
            let (p1, p2) = self.segment(k, [0, 0]);
            for l in 0..self.edges.len() {
                for tx in -reach..=reach {
                    for ty in -reach..=reach {
                        if l == k && tx == 0 && ty == 0 {
                            continue;
                        }
                        let (q1, q2) = self.segment(l, [tx, ty]);
                        if segments_conflict(p1, p2, q1, q2) {
                            return Err(Error::NonPlanar { a: self.edge_label(k), b: self.edge_label(l) });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// The infinite lift is connected iff the unit quotient is connected and its cycles
    /// generate the whole translation lattice.
    fn check_connected(&self) -> Result<()> {
        let n = self.vertices.len();
        let mut potential: Vec<Option<[i64; 2]>> = vec![None; n];
        potential[0] = Some([0, 0]);
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            let pv = potential[v].unwrap();
            for e in &self.edges {
                let next = if e.tail == v {
                    Some((e.head, [pv[0] + e.offset[0], pv[1] + e.offset[1]]))
                } else if e.head == v {
                    Some((e.tail, [pv[0] - e.offset[0], pv[1] - e.offset[1]]))
                } else {
                    None
                };
                if let Some((u, p)) = next {
                    if potential[u].is_none() {
                        potential[u] = Some(p);
                        stack.push(u);
                    }
                }
            }
        }
        if let Some(v) = potential.iter().position(Option::is_none) {
            return Err(Error::Disconnected(format!("vertex {} unreachable", self.vertices[v].id)));
        }
        let cycles: Vec<[i64; 2]> = self
            .edges
            .iter()
            .map(|e| {
                let pt = potential[e.tail].unwrap();
                let ph = potential[e.head].unwrap();
                [pt[0] + e.offset[0] - ph[0], pt[1] + e.offset[1] - ph[1]]
            })
            .collect();
        let mut g = 0i64;
        for a in &cycles {
            for b in &cycles {
                g = num_integer::gcd(g, a[0] * b[1] - a[1] * b[0]);
            }
        }
        if g != 1 {
            return Err(Error::Disconnected(format!(
                "cycle translations generate an index-{g} sublattice of Z^2"
            )));
        }
        Ok(())
    }

    fn unit_embedding(&self) -> Result<Embedded> {
        let mut g = Embedded {
            pos: self.vertices.iter().map(|v| v.pos).collect(),
            edges: Vec::new(),
            period: Some(1),
            root: None,
            rotation: Vec::new(),
        };
        for e in &self.edges {
            let disp = self.lifted_disp(e);
            let wrap = g.wrap_of(e.tail, e.head, disp);
            g.edges.push(EmbeddedEdge { tail: e.tail, head: e.head, disp, wrap });
        }
        g.rotation_from_angles()?;
        Ok(g)
    }

    pub fn lifted_disp(&self, e: &PeriodicEdge) -> Vec2 {
        let a = self.vertices[e.tail].pos;
        let b = self.vertices[e.head].pos;
        [b[0] + e.offset[0] as f64 - a[0], b[1] + e.offset[1] as f64 - a[1]]
    }

    /// Same graph with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: &Rat) -> Self {
        let mut g = self.clone();
        for e in &mut g.edges {
            e.w_fwd = &e.w_fwd * factor;
            e.w_bwd = &e.w_bwd * factor;
        }
        g
    }

    pub fn has_zero_weight(&self) -> bool {
        self.edges.iter().any(|e| e.w_fwd.is_zero() || e.w_bwd.is_zero())
    }

    pub fn weights_f64(&self) -> Vec<[f64; 2]> {
        self.edges.iter().map(|e| [rat_to_f64(&e.w_fwd), rat_to_f64(&e.w_bwd)]).collect()
    }
}
