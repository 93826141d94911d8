//! Exhaustive OCRSF-pair ensembles of small tori under a magnetic field.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::replica_rng;
use crate::error::{Error, Result};
use crate::height::height_change;
use crate::lattice::embedded::{edge_of, is_backward, Embedded, Vec2};
use crate::lattice::paths::shortest_cycle;
use crate::lattice::quotient::copy_index;
use crate::lattice::TorusInstance;
use crate::numeric::{rat_to_f64, Rat};
use crate::temperley::{enumerate_ocrsf_pairs, forest_cycles, forest_to_dimer, OcrsfPair};

/// Everything the statistics need about one pair.
#[derive(Clone, Debug)]
pub struct PairRecord {
    pub pair: OcrsfPair,
    pub weight: Rat,
    /// Height change `(h_x, h_y)` of the corresponding dimer configuration.
    pub height: [i64; 2],
    /// Number of primal components (one cycle each).
    pub components: usize,
    /// `v1` and `v2` joined by primal forest edges inside the fundamental box.
    pub connected: bool,
    /// Signed crossings of all primal and dual cycles with the reference curves of class
    /// `(1, 0)` and `(0, 1)`.
    pub crossings: [i64; 2],
    /// Signed crossings of all cycles with the segment from `v1` to `v2`.
    pub between: i64,
}

/// All OCRSF pairs of a torus with their records.
#[derive(Clone, Debug)]
pub struct TorusEnsemble {
    pub n: usize,
    pub v1: usize,
    pub v2: usize,
    pub records: Vec<PairRecord>,
}

/// Offset of the segment endpoints from `v1`, `v2`, keeping it off vertices and edge crossings.
const SEGMENT_SHIFT: Vec2 = [0.0123, 0.0071];

impl TorusEnsemble {
    /// Default pair: vertex 0 of copy `(0, 0)` and vertex 0 of copy `(0, 1)`.
    pub fn new(inst: &TorusInstance, cap: usize) -> Result<Self> {
        let nv0 = inst.torus.base.vertices.len();
        let v2 = copy_index(inst.n(), [0, 1 % inst.n() as i64]) * nv0;
        Self::with_vertices(inst, cap, 0, v2)
    }

    pub fn with_vertices(inst: &TorusInstance, cap: usize, v1: usize, v2: usize) -> Result<Self> {
        let p = inst.primal();
        if v1 >= p.vertex_count() || v2 >= p.vertex_count() {
            return Err(Error::InvalidInput("designated vertex out of range".into()));
        }
        let n = inst.n() as i64;
        let refs = [shortest_cycle(&p.emb, n, [1, 0])?, shortest_cycle(&p.emb, n, [0, 1])?];
        let pairs = enumerate_ocrsf_pairs(inst, cap)?;
        let records = pairs
            .into_par_iter()
            .map(|pair| record(inst, &refs, v1, v2, pair))
            .collect::<Result<Vec<_>>>()?;
        Ok(TorusEnsemble { n: inst.n(), v1, v2, records })
    }

    /// Unnormalised field weights `c(F) e^(-N B.h)`, scaled so the largest is 1.
    pub fn field_weights(&self, b: [f64; 2]) -> Vec<f64> {
        let nn = self.n as f64;
        let logs: Vec<f64> = self
            .records
            .iter()
            .map(|r| {
                let c = rat_to_f64(&r.weight);
                if c == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    c.ln() - nn * (b[0] * r.height[0] as f64 + b[1] * r.height[1] as f64)
                }
            })
            .collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        logs.iter().map(|l| (l - top).exp()).collect()
    }

    /// Exhaustive expectations under the field `b`.
    pub fn stats(&self, b: [f64; 2]) -> ConnectivityStats {
        let w = self.field_weights(b);
        let z: f64 = w.iter().sum();
        let mut s = ConnectivityStats::empty(b, self.n);
        for (r, &p) in self.records.iter().zip(&w) {
            s.accumulate(r, p / z);
        }
        s.n_samples = None;
        s.configurations = self.records.len();
        s
    }

    /// Expectations from `samples` exact draws under the field `b`.
    pub fn sampled_stats(&self, b: [f64; 2], samples: usize, seed: u64) -> ConnectivityStats {
        let picks = self.sample_indices(b, samples, seed);
        let mut s = ConnectivityStats::empty(b, self.n);
        for i in picks {
            s.accumulate(&self.records[i], 1.0 / samples as f64);
        }
        s.n_samples = Some(samples);
        s.seed = Some(seed);
        s.configurations = self.records.len();
        s
    }

    /// Indices of `samples` pairs drawn with probability proportional to the field weights;
    /// draw `i` uses stream `i`.
    pub fn sample_indices(&self, b: [f64; 2], samples: usize, seed: u64) -> Vec<usize> {
        let w = self.field_weights(b);
        let mut cum = Vec::with_capacity(w.len());
        let mut acc = 0.0;
        for x in &w {
            acc += x;
            cum.push(acc);
        }
        (0..samples as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = replica_rng(seed, i);
                let x = rng.gen::<f64>() * acc;
                let k = cum.partition_point(|&c| c <= x).min(cum.len() - 1);
                // Skip zero-weight records sitting on the boundary.
                (k..cum.len()).find(|&j| w[j] > 0.0).unwrap_or(k)
            })
            .collect()
    }

    /// Exact expectations at zero field.
    pub fn exact_stats(&self) -> ExactStats {
        let zero = || Rat::from_integer(0.into());
        let z: Rat = self.records.iter().map(|r| r.weight.clone()).sum();
        let mut e_h = [zero(), zero()];
        let mut e_cross = [zero(), zero()];
        let mut e_k = zero();
        let mut p = zero();
        for r in &self.records {
            let w = &r.weight / &z;
            for a in 0..2 {
                e_h[a] += &w * Rat::from_integer(r.height[a].into());
                e_cross[a] += &w * Rat::from_integer(r.crossings[a].into());
            }
            e_k += &w * Rat::from_integer((r.components as i64).into());
            if r.connected {
                p += &w;
            }
        }
        ExactStats { e_h, e_crossings: e_cross, e_k, p_connect: p }
    }

    /// Records for which `h = -X / 2` fails.
    pub fn crossing_mismatches(&self) -> Vec<usize> {
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| (0..2).any(|a| 2 * r.height[a] != -r.crossings[a]))
            .map(|(i, _)| i)
            .collect()
    }

    /// Records with `|signed crossings between v1 and v2| >= 2` where `v1`, `v2` are still
    /// connected inside the box. Needs distinct vertices, so `N >= 2` for the default pair.
    pub fn separation_violations(&self) -> Result<Vec<usize>> {
        if self.v1 == self.v2 {
            return Err(Error::InvalidSize("v1 and v2 coincide; the box overlaps itself".into()));
        }
        Ok(self
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.between.abs() >= 2 && r.connected)
            .map(|(i, _)| i)
            .collect())
    }

    /// Records with `|signed crossings between v1 and v2| >= 2`.
    pub fn separated_count(&self) -> usize {
        self.records.iter().filter(|r| r.between.abs() >= 2).count()
    }
}

/// Draws one pair with probability `c(F) e^(-N B.h) / Z`.
pub fn exact_torus_sample(ens: &TorusEnsemble, b: [f64; 2], seed: u64) -> &OcrsfPair {
    &ens.records[ens.sample_indices(b, 1, seed)[0]].pair
}

fn record(inst: &TorusInstance, refs: &[Vec<usize>; 2], v1: usize, v2: usize, pair: OcrsfPair) -> Result<PairRecord> {
    let p = inst.primal();
    let m = forest_to_dimer(&inst.double, &pair)?;
    let height = height_change(inst, &m)?;
    let primal_cycles = forest_cycles(&p.emb, &pair.primal);
    let dual_cycles = forest_cycles(&inst.dual.emb, &pair.dual);
    let mut crossings = [0i64; 2];
    for a in 0..2 {
        for c in &primal_cycles {
            for &h in c {
                for &(e, s) in &inst.paths.primal_crossings[a] {
                    if e == edge_of(h) {
                        crossings[a] += s as i64 * orient(h);
                    }
                }
            }
        }
        for c in &dual_cycles {
            for &g in c {
                for &h in &refs[a] {
                    if edge_of(h) == edge_of(g) {
                        crossings[a] += orient(h) * orient(g);
                    }
                }
            }
        }
    }
    let start = add(p.emb.pos[v1], SEGMENT_SHIFT);
    let mut end = add(p.emb.pos[v2], SEGMENT_SHIFT);
    if v1 == v2 {
        end[1] += inst.n() as f64;
    }
    let mut between = 0;
    for c in &primal_cycles {
        between += segment_crossings(&p.emb, c, start, end, inst.n());
    }
    for c in &dual_cycles {
        between += segment_crossings(&inst.dual.emb, c, start, end, inst.n());
    }
    let weight = pair.weight(p);
    Ok(PairRecord {
        components: primal_cycles.len(),
        connected: connected_in_box(&p.emb, &pair, v1, v2),
        height,
        crossings,
        between,
        weight,
        pair,
    })
}

fn orient(h: usize) -> i64 {
    if is_backward(h) {
        -1
    } else {
        1
    }
}

fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Signed crossings of a cycle (all its periodic lifts) with the segment `start -> end`;
/// `+1` when the cycle runs from the left of the segment to its right.
fn segment_crossings(emb: &Embedded, cycle: &[usize], start: Vec2, end: Vec2, n: usize) -> i64 {
    let d = [end[0] - start[0], end[1] - start[1]];
    let reach = (d[0].abs().max(d[1].abs()) / n as f64).ceil() as i64 + 1;
    let mut total = 0;
    for &h in cycle {
        let e = emb.disp(h);
        let denom = cross(d, e);
        if denom == 0.0 {
            continue;
        }
        for i in -reach..=reach {
            for j in -reach..=reach {
                let q = add(emb.start_point(h), [(i * n as i64) as f64, (j * n as i64) as f64]);
                let qs = [q[0] - start[0], q[1] - start[1]];
                let t = cross(qs, e) / denom;
                let u = cross(qs, d) / denom;
                if (0.0..1.0).contains(&t) && (0.0..1.0).contains(&u) {
                    total += if denom < 0.0 { 1 } else { -1 };
                }
            }
        }
    }
    total
}

/// Union-find over primal forest edges that do not wrap around the torus.
fn connected_in_box(emb: &Embedded, pair: &OcrsfPair, v1: usize, v2: usize) -> bool {
    let mut parent: Vec<usize> = (0..emb.vertex_count()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for h in pair.primal.iter().flatten() {
        if emb.wrap(*h) == [0, 0] {
            let (a, b) = (find(&mut parent, emb.tail(*h)), find(&mut parent, emb.head(*h)));
            parent[a] = b;
        }
    }
    find(&mut parent, v1) == find(&mut parent, v2)
}

/// Connectivity statistics at one field value.
#[derive(Clone, Debug, Serialize)]
pub struct ConnectivityStats {
    pub b: [f64; 2],
    pub n: usize,
    pub e_k: f64,
    pub e_h: [f64; 2],
    pub e_abs_h: f64,
    pub e_crossings: [f64; 2],
    pub p_connect: f64,
    /// `None` for exhaustive sums.
    pub n_samples: Option<usize>,
    pub seed: Option<u64>,
    pub configurations: usize,
}

impl ConnectivityStats {
    fn empty(b: [f64; 2], n: usize) -> Self {
        ConnectivityStats {
            b,
            n,
            e_k: 0.0,
            e_h: [0.0; 2],
            e_abs_h: 0.0,
            e_crossings: [0.0; 2],
            p_connect: 0.0,
            n_samples: None,
            seed: None,
            configurations: 0,
        }
    }

    fn accumulate(&mut self, r: &PairRecord, p: f64) {
        self.e_k += p * r.components as f64;
        for a in 0..2 {
            self.e_h[a] += p * r.height[a] as f64;
            self.e_crossings[a] += p * r.crossings[a] as f64;
        }
        self.e_abs_h += p * ((r.height[0] * r.height[0] + r.height[1] * r.height[1]) as f64).sqrt();
        if r.connected {
            self.p_connect += p;
        }
    }

    pub const CSV_HEADER: &'static str = "B_x,B_y,N,E_k,E_hx,E_hy,P_connect,n_samples,seed";

    /// One CSV row; exhaustive rows carry `exhaustive` and an empty seed.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.12},{:.12},{:.12},{:.12},{},{}",
            self.b[0],
            self.b[1],
            self.n,
            self.e_k,
            self.e_h[0],
            self.e_h[1],
            self.p_connect,
            self.n_samples.map_or("exhaustive".to_string(), |s| s.to_string()),
            self.seed.map_or(String::new(), |s| s.to_string()),
        )
    }
}

/// Rational expectations at zero field.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactStats {
    pub e_h: [Rat; 2],
    pub e_crossings: [Rat; 2],
    pub e_k: Rat,
    pub p_connect: Rat,
}

/// Rows for a list of field values.
pub fn stats_csv(rows: &[ConnectivityStats]) -> String {
    let mut s = String::from(ConnectivityStats::CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}
