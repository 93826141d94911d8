//! Height functions of dimer configurations, height changes and branch windings.
//!
//! A face of the double graph is a quadrilateral whose diagonal joins its two black corners.
//! Heights live on these diagonals: crossing an unmatched double edge rotates the diagonal
//! about the edge's black end, and the height changes by the signed rotation angle. Heights
//! are in radians; height changes of periodic configurations are normalised by `2pi`.
//!
//! The reference-matching height `(h^M - h^M0) / 2pi` is not implemented.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::double::DoubleGraph;
use crate::lattice::embedded::{angle, edge_of, rev, sub, Embedded, Vec2};
use crate::lattice::TorusInstance;
use crate::temperley::{dimer_to_forest, enumerate_dimers, DimerConfig};

pub use crate::temperley::{homology_data, normalize_class, HomologyData};

const TOL: f64 = 1e-9;

/// Signed angle from `from` to `to`, in `(-pi, pi]`.
pub fn signed_angle(from: Vec2, to: Vec2) -> f64 {
    let mut d = angle(to) - angle(from);
    while d <= -PI {
        d += 2.0 * PI;
    }
    while d > PI {
        d -= 2.0 * PI;
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Propagation {
    Bfs,
    Dfs,
}

#[derive(Clone, Debug)]
pub struct HeightFunction {
    pub base: usize,
    /// Height of every face at its canonical lift; `NaN` for faces touching removed vertices.
    pub height: Vec<f64>,
    /// Lattice position (in torus periods) of the lift on which `height` was assigned.
    pub lift: Vec<[i64; 2]>,
    /// Normalised height change `(h_x, h_y)` of a periodic configuration.
    pub change: Option<[i64; 2]>,
}

impl HeightFunction {
    /// Height of face `f` translated by `shift` torus periods.
    pub fn at(&self, f: usize, shift: [i64; 2]) -> f64 {
        let c = self.change.unwrap_or([0, 0]);
        let d = [shift[0] - self.lift[f][0], shift[1] - self.lift[f][1]];
        self.height[f] + 2.0 * PI * (d[0] * c[0] + d[1] * c[1]) as f64
    }
}

/// Diagonal of the face on the left of `h`, seen from the start of `h`.
fn diagonal(d: &DoubleGraph, h: usize) -> Vec2 {
    let f = d.faces.face_of[h];
    let cycle = &d.faces.cycles[f];
    let i = d.faces.index_in_face[h];
    sub(d.faces.corner[cycle[(i + 2) % cycle.len()]], d.faces.corner[h])
}

/// Half-edge of face `face_of[h]` starting at the black end of `edge_of(h)`.
fn black_corner(d: &DoubleGraph, h: usize) -> usize {
    if d.is_black(d.emb.tail(h)) {
        h
    } else {
        let cycle = &d.faces.cycles[d.faces.face_of[h]];
        let i = d.faces.index_in_face[h];
        cycle[(i + 1) % cycle.len()]
    }
}

/// Height increment and lattice translation when crossing from the face on the left of `h`
/// to the face on its right.
fn crossing(d: &DoubleGraph, h: usize) -> (f64, [i64; 2]) {
    let (a, b) = (black_corner(d, h), black_corner(d, rev(h)));
    let turn = signed_angle(diagonal(d, a), diagonal(d, b));
    let shift = match d.emb.period {
        None => [0, 0],
        Some(n) => {
            // Position of the head of `h` seen from the two lifts.
            let here = d.faces.corner[h];
            let there = d.faces.corner[rev(h)];
            let t = sub(crate::lattice::embedded::add(here, d.emb.disp(h)), there);
            let n = n as f64;
            [(t[0] / n).round() as i64, (t[1] / n).round() as i64]
        }
    };
    (turn, shift)
}

fn face_usable(d: &DoubleGraph, f: usize) -> bool {
    d.active_face(f)
}

/// Height function of a matching, propagated from `base` without crossing matched edges.
pub fn height_function(d: &DoubleGraph, m: &DimerConfig, base: usize) -> Result<HeightFunction> {
    height_function_with(d, m, base, Propagation::Bfs)
}

pub fn height_function_with(d: &DoubleGraph, m: &DimerConfig, base: usize, order: Propagation) -> Result<HeightFunction> {
    m.validate(d)?;
    let nf = d.faces.count();
    if base >= nf || !face_usable(d, base) {
        return Err(Error::InvalidInput(format!("base face {base} is not usable")));
    }
    let mut matched = vec![false; d.edge_count()];
    for &de in &m.edges {
        matched[de] = true;
    }
    let mut height = vec![f64::NAN; nf];
    let mut lift = vec![[0i64; 2]; nf];
    let mut seen = vec![false; nf];
    // Residual equations `height difference = 2pi (shift . change)` from non-tree crossings.
    let mut equations: Vec<(f64, [i64; 2])> = Vec::new();
    let mut frontier = VecDeque::new();
    seen[base] = true;
    height[base] = 0.0;
    frontier.push_back(base);
    while let Some(f) = match order {
        Propagation::Bfs => frontier.pop_front(),
        Propagation::Dfs => frontier.pop_back(),
    } {
        for &h in &d.faces.cycles[f] {
            if matched[edge_of(h)] || !d.active_edge(edge_of(h)) {
                continue;
            }
            let g = d.faces.face_of[rev(h)];
            if !face_usable(d, g) {
                continue;
            }
            let (turn, shift) = crossing(d, h);
            let value = height[f] + turn;
            let at = [lift[f][0] + shift[0], lift[f][1] + shift[1]];
            if !seen[g] {
                seen[g] = true;
                height[g] = value;
                lift[g] = at;
                frontier.push_back(g);
            } else {
                equations.push((value - height[g], [at[0] - lift[g][0], at[1] - lift[g][1]]));
            }
        }
    }
    if (0..nf).any(|f| face_usable(d, f) && !seen[f]) {
        return Err(Error::Invariant("faces unreachable without crossing a dimer".into()));
    }
    let change = match d.emb.period {
        None => None,
        Some(_) => Some(solve_change(&equations)?),
    };
    let c = change.unwrap_or([0, 0]);
    for (diff, s) in &equations {
        let expected = 2.0 * PI * (s[0] * c[0] + s[1] * c[1]) as f64;
        if (diff - expected).abs() > 1e-6 {
            return Err(Error::Invariant(format!("height propagation inconsistent: {diff} vs {expected}")));
        }
    }
    Ok(HeightFunction { base, height, lift, change })
}

/// Integer `(h_x, h_y)` from the equations `diff = 2pi (s . c)`.
fn solve_change(equations: &[(f64, [i64; 2])]) -> Result<[i64; 2]> {
    let norm = |x: f64| -> Result<i64> {
        let r = x / (2.0 * PI);
        let k = r.round();
        if (r - k).abs() > 1e-6 {
            return Err(Error::Invariant(format!("non-integer normalised height change {r}")));
        }
        Ok(k as i64)
    };
    for (i, &(d1, s1)) in equations.iter().enumerate() {
        if s1 == [0, 0] {
            continue;
        }
        for &(d2, s2) in &equations[i + 1..] {
            let det = s1[0] * s2[1] - s1[1] * s2[0];
            if det != 0 {
                let (a, b) = (norm(d1)?, norm(d2)?);
                let hx = (a * s2[1] - b * s1[1]) as f64 / det as f64;
                let hy = (s1[0] * b - s2[0] * a) as f64 / det as f64;
                if hx.fract().abs() > TOL || hy.fract().abs() > TOL {
                    return Err(Error::Invariant("height change is not integral".into()));
                }
                return Ok([hx as i64, hy as i64]);
            }
        }
    }
    Err(Error::Invariant("propagation did not wrap around both torus directions".into()))
}

/// `(h_x, h_y)` of a torus matching.
pub fn height_change(inst: &TorusInstance, m: &DimerConfig) -> Result<[i64; 2]> {
    let hf = height_function(&inst.double, m, 0)?;
    hf.change.ok_or_else(|| Error::Invariant("height change needs a torus".into()))
}

/// Predicted height change `(-n a, m a)` with `a = k - k1 - k2`.
pub fn predicted_change(h: &HomologyData) -> [i64; 2] {
    let a = h.k as i64 - h.k1 as i64 - h.k2 as i64;
    [-h.n * a, h.m * a]
}

/// `(-1)^(h_x h_y + h_x + h_y) == (-1)^(k - k1 - k2)`.
pub fn sign_identity_holds(change: [i64; 2], h: &HomologyData) -> bool {
    let [x, y] = change;
    let a = h.k as i64 - h.k1 as i64 - h.k2 as i64;
    (x * y + x + y).rem_euclid(2) == a.rem_euclid(2)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Prop21Failure {
    pub config: usize,
    pub expected: [i64; 2],
    pub got: [i64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop21Report {
    pub total: usize,
    pub passed: usize,
    pub failures: Vec<Prop21Failure>,
    /// Configurations where the sign identity `(-1)^(hx hy + hx + hy) = s(k, m, n)` fails.
    pub sign_failures: Vec<usize>,
}

/// Checks `h_x = -n(k - k1 - k2)`, `h_y = m(k - k1 - k2)` on every matching of a torus.
pub fn check_prop21(inst: &TorusInstance, cap: usize) -> Result<Prop21Report> {
    use rayon::prelude::*;
    let configs = enumerate_dimers(&inst.double, cap)?;
    let results: Vec<(usize, [i64; 2], [i64; 2], bool)> = configs
        .par_iter()
        .enumerate()
        .map(|(i, m)| {
            let got = height_change(inst, m)?;
            let h = homology_data(inst, &dimer_to_forest(&inst.double, m)?)?;
            Ok((i, predicted_change(&h), got, sign_identity_holds(got, &h)))
        })
        .collect::<Result<_>>()?;
    let failures: Vec<Prop21Failure> = results
        .iter()
        .filter(|r| r.1 != r.2)
        .map(|r| Prop21Failure { config: r.0, expected: r.1, got: r.2 })
        .collect();
    Ok(Prop21Report {
        total: configs.len(),
        passed: configs.len() - failures.len(),
        failures,
        sign_failures: results.iter().filter(|r| !r.3).map(|r| r.0).collect(),
    })
}

impl Prop21Report {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "total": self.total,
            "passed": self.passed,
            "failures": self.failures.iter().map(|f| serde_json::json!({
                "config": f.config, "expected": f.expected, "got": f.got,
            })).collect::<Vec<_>>(),
        })
    }
}

/// `sum_M c(M) z^-h_x w^-h_y (-1)^(h_x h_y + h_x + h_y)` as a Laurent polynomial.
pub fn height_sum(inst: &TorusInstance, cap: usize) -> Result<crate::laurent::LaurentPoly<crate::numeric::Rat>> {
    let mut terms = Vec::new();
    for m in enumerate_dimers(&inst.double, cap)? {
        let [x, y] = height_change(inst, &m)?;
        let w = m.weight(&inst.double);
        let w = if (x * y + x + y).rem_euclid(2) == 1 { -w } else { w };
        terms.push(((-x, -y), w));
    }
    Ok(crate::laurent::LaurentPoly::from_terms(terms))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchWinding {
    pub path: Vec<usize>,
    pub winding: f64,
}

/// Left turns minus right turns along a vertex path of an embedded graph.
pub fn branch_winding(emb: &Embedded, path: &[usize]) -> Result<BranchWinding> {
    let mut dirs = Vec::new();
    for w in path.windows(2) {
        let h = (0..2 * emb.edge_count())
            .find(|&h| emb.tail(h) == w[0] && emb.head(h) == w[1])
            .ok_or_else(|| Error::InvalidInput(format!("vertices {} and {} are not adjacent", w[0], w[1])))?;
        dirs.push(emb.disp(h));
    }
    Ok(BranchWinding { path: path.to_vec(), winding: turning(&dirs) })
}

/// Winding along a sequence of half-edges.
pub fn half_edge_winding(emb: &Embedded, halves: &[usize]) -> f64 {
    turning(&halves.iter().map(|&h| emb.disp(h)).collect::<Vec<_>>())
}

fn turning(dirs: &[Vec2]) -> f64 {
    dirs.windows(2).map(|w| signed_angle(w[0], w[1])).sum()
}

/// `h^T(v) = h^M(f) - alpha^T(f)` for the face `f` on the left of the primal half-edge `h`
/// starting at `v`, next to the double edge from `v` to the white vertex of `h`.
pub fn tree_height(d: &DoubleGraph, hf: &HeightFunction, h: usize) -> f64 {
    let de = 4 * edge_of(h) + (h & 1);
    // Double half-edge from the primal vertex to the white vertex.
    let dh = 2 * de;
    let f = d.faces.face_of[dh];
    let alpha = crate::lattice::embedded::ccw_angle(d.emb.disp(dh), diagonal(d, dh));
    hf.height[f] - alpha
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_square_winds_three_quarter_turns() {
        let dirs = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        assert!((turning(&dirs) - 1.5 * PI).abs() < 1e-12);
        assert_eq!(turning(&[[1.0, 0.0], [2.0, 0.0]]), 0.0);
    }

    #[test]
    fn signed_angle_range() {
        assert!((signed_angle([1.0, 0.0], [0.0, -1.0]) + PI / 2.0).abs() < 1e-12);
        assert!((signed_angle([1.0, 0.0], [-1.0, 0.0]) - PI).abs() < 1e-12);
    }
}
