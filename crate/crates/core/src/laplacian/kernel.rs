//! Determinantal edge kernels and Green matrices of wired graphs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{wired_laplacian, IncidenceOps};
use crate::error::{Error, Result};
use crate::kasteleyn::{default_orientation, kasteleyn_matrix, signed_combination, KasteleynOrientation, PartitionFunction};
use crate::lattice::double::DoubleGraph;
use crate::lattice::embedded::{edge_of, sub};
use crate::lattice::{PeriodicGraph, TorusInstance, WiredInstance};
use crate::numeric::{rat, Matrix, Rat, Scalar};

/// Double edge carrying the dimer of a directed primal edge.
pub fn dimer_of_half(h: usize) -> usize {
    4 * edge_of(h) + (h & 1)
}

/// `K` and `K^-1` of a wired double graph (trivial connection).
#[derive(Clone, Debug)]
pub struct EdgeKernel<T> {
    pub k: Matrix<T>,
    /// Rows indexed by active white vertices, columns by active black vertices.
    pub kinv: Matrix<T>,
    pub orientation: KasteleynOrientation,
}

impl<T: Scalar> EdgeKernel<T> {
    pub fn wired(w: &WiredInstance) -> Result<Self> {
        let orientation = default_orientation(&w.double, w.primal())?;
        let k = kasteleyn_matrix(&w.double, &orientation, None, &T::one(), &T::one())?;
        let kinv = k.inverse()?;
        Ok(EdgeKernel { k, kinv, orientation })
    }

    fn entry(&self, d: &DoubleGraph, de: usize) -> Option<(usize, usize, T)> {
        let r = d.row_of[d.black_end(de)]?;
        let c = d.col_of[d.white_end(de)]?;
        Some((r, c, self.k[(r, c)].clone()))
    }

    /// The matrix with entries `K(e_j) K^-1_{e_i, v_j}` for directed primal edges.
    pub fn directed_matrix(&self, d: &DoubleGraph, halves: &[usize]) -> Matrix<T> {
        let cols: Vec<Option<(usize, usize, T)>> = halves.iter().map(|&h| self.entry(d, dimer_of_half(h))).collect();
        Matrix::from_fn(halves.len(), halves.len(), |i, j| {
            let wi = d.col_of[d.white_of(edge_of(halves[i]))].unwrap();
            match &cols[j] {
                Some((r, _, kv)) => kv.clone() * self.kinv[(wi, *r)].clone(),
                None => T::zero(),
            }
        })
    }

    /// Probability that every listed directed edge belongs to the tree; edges sharing a
    /// primal edge or a starting point give 0.
    pub fn directed_probability(&self, d: &DoubleGraph, halves: &[usize]) -> Result<T> {
        let start = |h: usize| d.black_end(dimer_of_half(h));
        for (i, &a) in halves.iter().enumerate() {
            for &b in &halves[..i] {
                if edge_of(a) == edge_of(b) || start(a) == start(b) {
                    return Ok(T::zero());
                }
            }
        }
        self.directed_matrix(d, halves).det()
    }

    /// The two-term edge-edge kernel of undirected edges.
    pub fn undirected_matrix(&self, d: &DoubleGraph, edges: &[usize]) -> Matrix<T> {
        let fwd: Vec<usize> = edges.iter().map(|&e| 2 * e).collect();
        let bwd: Vec<usize> = edges.iter().map(|&e| 2 * e + 1).collect();
        let a = self.directed_matrix(d, &fwd);
        let b = self.directed_matrix(d, &bwd);
        Matrix::from_fn(edges.len(), edges.len(), |i, j| a[(i, j)].clone() + b[(i, j)].clone())
    }

    /// Probability that every listed undirected edge belongs to the tree.
    pub fn undirected_probability(&self, d: &DoubleGraph, edges: &[usize]) -> Result<T> {
        self.undirected_matrix(d, edges).det()
    }
}

/// Probability on a torus that the listed double edges are all dimers, from the four
/// forced-row determinants combined with the calibrated sign pattern.
pub fn torus_dimer_probability(inst: &TorusInstance, pf: &PartitionFunction, dimers: &[usize]) -> Result<Rat> {
    let d = &inst.double;
    for (i, &a) in dimers.iter().enumerate() {
        for &b in &dimers[..i] {
            if a == b || d.black_end(a) == d.black_end(b) || d.white_end(a) == d.white_end(b) {
                return Ok(if a == b { torus_dimer_probability(inst, pf, &dedup(dimers))? } else { rat(0, 1) });
            }
        }
    }
    let o = default_orientation(d, inst.primal())?;
    let pm = |b: bool| if b { rat(-1, 1) } else { rat(1, 1) };
    let mut dets: [Rat; 4] = Default::default();
    for (k, slot) in dets.iter_mut().enumerate() {
        let mut m = kasteleyn_matrix(d, &o, Some(&inst.paths.marking), &pm(k & 2 != 0), &pm(k & 1 != 0))?;
        for &de in dimers {
            let r = d.row_of[d.black_end(de)].unwrap();
            let c = d.col_of[d.white_end(de)].unwrap();
            for j in 0..m.cols() {
                m[(r, j)] = rat(0, 1);
            }
            // Only this double edge, even when parallel edges share the entry.
            let [p, q] = inst.paths.marking[de];
            let mut v = d.weight[de].clone() * pm(k & 2 != 0).powi(p as i64) * pm(k & 1 != 0).powi(q as i64);
            if o.sign[de] < 0 {
                v = -v;
            }
            m[(r, c)] = v;
        }
        *slot = m.det()?;
    }
    Ok(signed_combination(&dets, &pf.pattern) / pf.value.clone())
}

fn dedup(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Directed-edge probability of a torus OCRSF measure.
pub fn torus_edge_probability(inst: &TorusInstance, pf: &PartitionFunction, halves: &[usize]) -> Result<Rat> {
    let dimers: Vec<usize> = halves.iter().map(|&h| dimer_of_half(h)).collect();
    torus_dimer_probability(inst, pf, &dimers)
}

/// `B_N` with rows indexed by primal edges and columns by interior vertices.
#[derive(Clone, Debug)]
pub struct GreenMatrix<T> {
    pub b: Matrix<T>,
    /// Primal vertex of every column.
    pub vertices: Vec<usize>,
    /// Row `e` compares walks from `ends[e].1` and `ends[e].0`.
    pub ends: Vec<(usize, usize)>,
}

/// Solves `B D^-1 Delta~ = d~`.
pub fn green_matrix<T: Scalar>(w: &WiredInstance) -> Result<GreenMatrix<T>> {
    let lap = wired_laplacian::<T>(w);
    let o = default_orientation(&w.double, w.primal())?;
    let ops = IncidenceOps::new(&w.double, &o, None, &T::one(), &T::one())?;
    let rw = lap.matrix.scale_rows(&lap.degree.iter().map(|x| T::one() / x.clone()).collect::<Vec<_>>());
    // B (D^-1 Delta~) = d~  <=>  (D^-1 Delta~)^T B^T = d~^T.
    let b = rw.transpose().solve(&ops.d.transpose())?.transpose();
    let p = w.primal();
    let ends = (0..p.edge_count())
        .map(|e| {
            let (t, h) = (p.emb.edges[e].tail, p.emb.edges[e].head);
            if o.flipped[e] {
                (h, t)
            } else {
                (t, h)
            }
        })
        .collect();
    Ok(GreenMatrix { b, vertices: lap.vertices, ends })
}

/// Expected visit counts `Delta~^-1 D` of the walk killed at the root.
pub fn visit_matrix<T: Scalar>(w: &WiredInstance) -> Result<Matrix<T>> {
    let lap = wired_laplacian::<T>(w);
    let dm = Matrix::from_fn(lap.degree.len(), lap.degree.len(), |i, j| if i == j { lap.degree[i].clone() } else { T::zero() });
    lap.matrix.solve(&dm)
}

#[derive(Clone, Debug, Serialize)]
pub struct GreenReport {
    /// `B` against `(K^-1)^V D`.
    pub kernel_residual: f64,
    /// `B` against differences of expected visit counts.
    pub visit_residual: f64,
    pub passed: bool,
}

pub fn verify_green<T: Scalar>(w: &WiredInstance) -> Result<GreenReport> {
    let g = green_matrix::<T>(w)?;
    let kernel = EdgeKernel::<T>::wired(w)?;
    let lap = wired_laplacian::<T>(w);
    let np = lap.vertices.len();
    let kv = kernel.kinv.select(&(0..kernel.kinv.rows()).collect::<Vec<_>>(), &(0..np).collect::<Vec<_>>());
    let kd = kv.scale_cols(&lap.degree);
    let kernel_residual = g.b.sub(&kd).max_abs();
    let visits = visit_matrix::<T>(w)?;
    let root = w.root();
    let row = |v: usize, c: usize| if v == root { T::zero() } else { visits[(lap.index_of[v].unwrap(), c)].clone() };
    let diff = Matrix::from_fn(g.b.rows(), np, |e, c| {
        let (a, b) = g.ends[e];
        row(b, c) - row(a, c)
    });
    let visit_residual = g.b.sub(&diff).max_abs();
    let tol = if T::EXACT { 0.0 } else { 1e-9 };
    Ok(GreenReport { kernel_residual, visit_residual, passed: kernel_residual <= tol && visit_residual <= tol })
}

/// Neighbour tables for killed random walks.
#[derive(Clone, Debug)]
pub struct WalkTable {
    pub next: Vec<Vec<usize>>,
    pub cumulative: Vec<Vec<f64>>,
    pub root: usize,
}

impl WalkTable {
    pub fn new(w: &WiredInstance) -> Self {
        let p = w.primal();
        let nv = p.vertex_count();
        let mut next = vec![Vec::new(); nv];
        let mut cumulative: Vec<Vec<f64>> = vec![Vec::new(); nv];
        for h in 0..2 * p.edge_count() {
            let v = p.emb.tail(h);
            let c = p.half_weight_f64(h);
            if c > 0.0 {
                let acc = cumulative[v].last().copied().unwrap_or(0.0) + c;
                next[v].push(p.emb.head(h));
                cumulative[v].push(acc);
            }
        }
        WalkTable { next, cumulative, root: w.root() }
    }

    pub fn step<R: Rng>(&self, v: usize, rng: &mut R) -> usize {
        let cum = &self.cumulative[v];
        let x = rng.gen::<f64>() * cum[cum.len() - 1];
        let k = cum.partition_point(|&c| c <= x).min(cum.len() - 1);
        self.next[v][k]
    }
}

pub const STEP_CAP: usize = 1_000_000;
const CHUNK: usize = 1024;

/// Per-vertex mean and variance of visit counts of walks from `start` killed at the root.
#[derive(Clone, Debug, Serialize)]
pub struct VisitStats {
    pub walks: usize,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub unabsorbed: usize,
}

/// Monte-Carlo visit counts. Chunk `i` uses stream `stream * 2^32 + i` of a ChaCha8 generator keyed by `seed`.
pub fn visit_counts(table: &WalkTable, start: usize, walks: usize, seed: u64, stream: u64) -> VisitStats {
    let nv = table.next.len();
    let chunks = walks.div_ceil(CHUNK);
    let partial: Vec<(Vec<f64>, Vec<f64>, usize)> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((stream << 32) + i as u64);
            let mut sum = vec![0.0; nv];
            let mut sq = vec![0.0; nv];
            let mut unabsorbed = 0;
            let mut count = vec![0u32; nv];
            let mut touched = Vec::new();
            for _ in 0..CHUNK.min(walks - i * CHUNK) {
                let mut v = start;
                let mut steps = 0;
                while v != table.root {
                    if count[v] == 0 {
                        touched.push(v);
                    }
                    count[v] += 1;
                    if steps == STEP_CAP {
                        unabsorbed += 1;
                        break;
                    }
                    v = table.step(v, &mut rng);
                    steps += 1;
                }
                for &u in &touched {
                    let c = count[u] as f64;
                    sum[u] += c;
                    sq[u] += c * c;
                    count[u] = 0;
                }
                touched.clear();
            }
            (sum, sq, unabsorbed)
        })
        .collect();
    let mut sum = vec![0.0; nv];
    let mut sq = vec![0.0; nv];
    let mut unabsorbed = 0;
    for (s, q, u) in partial {
        for v in 0..nv {
            sum[v] += s[v];
            sq[v] += q[v];
        }
        unabsorbed += u;
    }
    let n = walks as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let var = sq.iter().zip(&mean).map(|(q, m)| (q / n - m * m).max(0.0) * n / (n - 1.0).max(1.0)).collect();
    VisitStats { walks, mean, var, unabsorbed }
}

#[derive(Clone, Debug, Serialize)]
pub struct GreenRowCheck {
    pub edge: usize,
    pub walks: usize,
    /// `(vertex, exact, estimate, standard error)`.
    pub entries: Vec<(usize, f64, f64, f64)>,
    pub max_z: f64,
    pub unabsorbed: usize,
    pub passed: bool,
}

/// Compares row `e` of `B_N` with Monte-Carlo visit differences (3 standard errors).
pub fn monte_carlo_green_row(w: &WiredInstance, g: &GreenMatrix<Rat>, e: usize, walks: usize, seed: u64) -> GreenRowCheck {
    let table = WalkTable::new(w);
    let (a, b) = g.ends[e];
    let walk = |start: usize, stream: u64| {
        if start == table.root {
            VisitStats { walks, mean: vec![0.0; table.next.len()], var: vec![0.0; table.next.len()], unabsorbed: 0 }
        } else {
            visit_counts(&table, start, walks, seed, stream)
        }
    };
    let sa = walk(a, 2 * e as u64);
    let sb = walk(b, 2 * e as u64 + 1);
    let n = walks as f64;
    let mut entries = Vec::new();
    let mut max_z: f64 = 0.0;
    for (c, &v) in g.vertices.iter().enumerate() {
        let exact = crate::numeric::rat_to_f64(&g.b[(e, c)]);
        let est = sb.mean[v] - sa.mean[v];
        let se = ((sa.var[v] + sb.var[v]) / n).sqrt();
        let z = if se > 0.0 { (est - exact).abs() / se } else if (est - exact).abs() < 1e-12 { 0.0 } else { f64::INFINITY };
        max_z = max_z.max(z);
        entries.push((v, exact, est, se));
    }
    let unabsorbed = sa.unabsorbed + sb.unabsorbed;
    GreenRowCheck { edge: e, walks, entries, max_z, unabsorbed, passed: max_z <= 3.0 && unabsorbed == 0 }
}

/// One row of the condition-(star) probe table.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ProbeRow {
    pub n: usize,
    pub distance: usize,
    pub max_abs_entry: f64,
    pub verdict: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct StarProbe {
    pub rows: Vec<ProbeRow>,
    pub decay: bool,
    /// Largest entry gap between consecutive sizes on the common central window.
    pub gaps: Vec<(usize, usize, f64)>,
    pub converging: bool,
}

type WindowKey = (usize, [i64; 2], usize, [i64; 2]);

/// Maximal `|B_N|` per integer distance bucket, plus the central window used for convergence.
fn probe_size(g: &PeriodicGraph, n: usize, radius: usize) -> Result<(BTreeMap<usize, f64>, BTreeMap<WindowKey, f64>)> {
    let w = WiredInstance::new(g, n)?;
    let gm = green_matrix::<crate::numeric::Cplx>(&w)?;
    let p = w.primal();
    let center = (n as i64) / 2;
    let mut buckets = BTreeMap::new();
    let mut window = BTreeMap::new();
    for e in 0..p.edge_count() {
        let mid = p.midpoint(e);
        // Orient every row as the fundamental edge, tail to head.
        let s = if gm.ends[e].0 == p.emb.edges[e].tail { 1.0 } else { -1.0 };
        for (c, &v) in gm.vertices.iter().enumerate() {
            let x = s * gm.b[(e, c)].re;
            let dv = sub(p.emb.pos[v], mid);
            let dist = (dv[0] * dv[0] + dv[1] * dv[1]).sqrt().floor() as usize;
            if dist <= radius {
                let m = buckets.entry(dist).or_insert(0.0f64);
                *m = m.max(x.abs());
            }
            let (be, ce) = p.edge_origin[e];
            if let Some((bv, cv)) = p.vertex_origin[v] {
                let re = [ce[0] - center, ce[1] - center];
                let rv = [cv[0] - center, cv[1] - center];
                if re.iter().chain(&rv).all(|x| x.abs() <= 2) && p.vertex_origin[p.emb.edges[e].tail].is_some() {
                    window.insert((be, re, bv, rv), x);
                }
            }
        }
    }
    Ok((buckets, window))
}

/// Condition (star) probe: decay in distance and convergence in `N` of the Green-matrix entries.
pub fn star_condition_probe(g: &PeriodicGraph, sizes: &[usize], radius: usize) -> Result<StarProbe> {
    if sizes.is_empty() {
        return Err(Error::InvalidInput("no sizes".into()));
    }
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    let results: Vec<(BTreeMap<usize, f64>, BTreeMap<WindowKey, f64>)> =
        sizes.par_iter().map(|&n| probe_size(g, n, radius)).collect::<Result<_>>()?;
    let largest = &results[results.len() - 1].0;
    let mut decay = true;
    let mut verdicts = BTreeMap::new();
    for (&r, &m) in largest {
        if r == 0 {
            continue;
        }
        if let Some(&far) = largest.get(&(2 * r)) {
            let ok = far < 0.5 * m;
            decay &= ok;
            verdicts.insert(r, if ok { "decay" } else { "no-decay" });
        }
    }
    let mut rows = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        for (&r, &m) in &results[i].0 {
            let verdict = if i + 1 == sizes.len() { verdicts.get(&r).copied().unwrap_or("-") } else { "-" };
            rows.push(ProbeRow { n, distance: r, max_abs_entry: m, verdict: verdict.to_string() });
        }
    }
    let mut gaps = Vec::new();
    for i in 1..sizes.len() {
        let (a, b) = (&results[i - 1].1, &results[i].1);
        let gap = a.iter().filter_map(|(k, x)| b.get(k).map(|y| (x - y).abs())).fold(0.0, f64::max);
        gaps.push((sizes[i - 1], sizes[i], gap));
    }
    let converging = gaps.windows(2).all(|w| w[1].2 < w[0].2);
    Ok(StarProbe { rows, decay, gaps, converging })
}

impl StarProbe {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,distance,max_abs_entry,verdict\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{:.12e},{}\n", r.n, r.distance, r.max_abs_entry, r.verdict));
        }
        s
    }
}
