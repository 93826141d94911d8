//! Slopes, amoeba membership, root order at `(1, 1)` and phase-diagram scans.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lattice::{PeriodicGraph, TorusInstance};
use crate::laurent::{newton_polygon, LaurentPoly, NewtonPolygon};
use crate::numeric::{Cplx, Rat};
use crate::sampler::TorusEnsemble;

/// Default number of angles per circle when sampling `P` on a torus.
pub const TORUS_SAMPLES: usize = 256;
/// `min |P|` below this counts as a zero on the sampled torus.
pub const ZERO_TOL: f64 = 1e-7;

/// Finite-N slope data at one field value.
#[derive(Clone, Debug, Serialize)]
pub struct SlopeEstimate {
    pub b: [f64; 2],
    /// `(N, E[h]/N)` for every size.
    pub per_n: Vec<(usize, [f64; 2])>,
    /// Value at the largest size.
    pub estimate: [f64; 2],
    /// Distance between the two largest sizes, when there are two.
    pub error_proxy: Option<f64>,
}

/// Exhaustive ensembles for a list of sizes, reweighted on demand.
#[derive(Clone, Debug)]
pub struct SlopeModel {
    pub ensembles: Vec<TorusEnsemble>,
}

impl SlopeModel {
    pub fn new(g: &PeriodicGraph, sizes: &[usize], cap: usize) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidInput("empty size list".into()));
        }
        let mut sorted = sizes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let ensembles = sorted
            .iter()
            .map(|&n| TorusEnsemble::new(&TorusInstance::new(g, n)?, cap))
            .collect::<Result<_>>()?;
        Ok(SlopeModel { ensembles })
    }

    pub fn estimate(&self, b: [f64; 2]) -> SlopeEstimate {
        let per_n: Vec<(usize, [f64; 2])> = self
            .ensembles
            .iter()
            .map(|e| {
                let s = e.stats(b);
                let n = e.n as f64;
                (e.n, [s.e_h[0] / n, s.e_h[1] / n])
            })
            .collect();
        let estimate = per_n[per_n.len() - 1].1;
        let error_proxy = (per_n.len() >= 2).then(|| {
            let a = per_n[per_n.len() - 2].1;
            ((a[0] - estimate[0]).powi(2) + (a[1] - estimate[1]).powi(2)).sqrt()
        });
        SlopeEstimate { b, per_n, estimate, error_proxy }
    }

    /// `E[h]/N` at zero field in exact arithmetic.
    pub fn zero_field_exact(&self) -> Vec<(usize, [Rat; 2])> {
        self.ensembles
            .iter()
            .map(|e| {
                let s = e.exact_stats();
                let n = Rat::from_integer((e.n as i64).into());
                (e.n, [&s.e_h[0] / &n, &s.e_h[1] / &n])
            })
            .collect()
    }
}

pub fn slope_estimate(g: &PeriodicGraph, b: [f64; 2], sizes: &[usize], cap: usize) -> Result<SlopeEstimate> {
    Ok(SlopeModel::new(g, sizes, cap)?.estimate(b))
}

/// Multiplicity of the root of `P` at `(1, 1)`: 1 if the gradient there is nonzero, else 2.
pub fn root_order_at_11(p: &LaurentPoly<Rat>) -> Result<u8> {
    let one = Rat::from_integer(1.into());
    let v = p.eval_exact(&one, &one);
    if v != Rat::from_integer(0.into()) {
        return Err(Error::InvalidInput(format!("P(1,1) = {v} is not zero")));
    }
    let (gz, gw) = p.gradient_at_one();
    Ok(if gz == Rat::from_integer(0.into()) && gw == Rat::from_integer(0.into()) { 2 } else { 1 })
}

/// `P` sampled on the torus `|z| = e^x`, `|w| = e^y`.
#[derive(Clone, Debug, Serialize)]
pub struct TorusSample {
    pub x: f64,
    pub y: f64,
    pub min_abs: f64,
    /// A zero was detected (small modulus or varying winding numbers).
    pub zero: bool,
    /// Winding numbers of `P` in `z` and in `w` when they are constant over the torus.
    pub order: Option<[i64; 2]>,
    /// Gradient of the Ronkin function `mean log |P|` with respect to `(x, y)`.
    pub ronkin_gradient: [f64; 2],
}

/// `P` grouped by powers of `w`, each a polynomial in `z`.
struct Grouped {
    rows: Vec<(i64, Vec<(i64, f64)>)>,
}

impl Grouped {
    fn new(p: &LaurentPoly<f64>) -> Self {
        let mut by_j: BTreeMap<i64, Vec<(i64, f64)>> = BTreeMap::new();
        for (&(i, j), &c) in &p.terms {
            by_j.entry(j).or_default().push((i, c));
        }
        Grouped { rows: by_j.into_iter().collect() }
    }
}

fn circle(r: f64, m: usize) -> Vec<Cplx> {
    (0..m).map(|k| Cplx::from_polar(r, 2.0 * PI * k as f64 / m as f64)).collect()
}

/// Winding number of a closed sampled curve given the arguments of its points.
fn winding(args: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = args.collect();
    let mut total = 0.0;
    for k in 0..v.len() {
        let mut d = v[(k + 1) % v.len()] - v[k];
        if d > PI {
            d -= 2.0 * PI;
        } else if d <= -PI {
            d += 2.0 * PI;
        }
        total += d;
    }
    total / (2.0 * PI)
}

/// Samples `P` on an `m x m` grid of the torus at `(x, y)`.
pub fn torus_sample(p: &LaurentPoly<f64>, x: f64, y: f64, m: usize) -> TorusSample {
    torus_sample_grouped(&Grouped::new(p), x, y, m)
}

fn torus_sample_grouped(g: &Grouped, x: f64, y: f64, m: usize) -> TorusSample {
    let zs = circle(x.exp(), m);
    let ws = circle(y.exp(), m);
    // a[r][k] = A_j(z_k) and da[r][k] = z A_j'(z_k) for the row of w^j.
    let mut a = vec![vec![Cplx::new(0.0, 0.0); m]; g.rows.len()];
    let mut da = a.clone();
    for (r, (_, terms)) in g.rows.iter().enumerate() {
        for (k, z) in zs.iter().enumerate() {
            for &(i, c) in terms {
                let t = z.powi(i as i32) * c;
                a[r][k] += t;
                da[r][k] += t * i as f64;
            }
        }
    }
    let wp: Vec<Vec<Cplx>> = g.rows.iter().map(|(j, _)| ws.iter().map(|w| w.powi(*j as i32)).collect()).collect();
    let value = |k: usize, l: usize| {
        let mut v = Cplx::new(0.0, 0.0);
        for r in 0..g.rows.len() {
            v += a[r][k] * wp[r][l];
        }
        v
    };
    let mut args = vec![0.0; m * m];
    let mut min_abs = f64::INFINITY;
    for k in 0..m {
        for l in 0..m {
            let v = value(k, l);
            min_abs = min_abs.min(v.norm());
            args[k * m + l] = v.arg();
        }
    }
    let mut order = None;
    if min_abs >= ZERO_TOL {
        let wz: Vec<f64> = (0..m).map(|l| winding((0..m).map(|k| args[k * m + l]))).collect();
        let ww: Vec<f64> = (0..m).map(|k| winding((0..m).map(|l| args[k * m + l]))).collect();
        let constant = |ws: &[f64]| {
            let r = ws[0].round();
            ws.iter().all(|&w| (w - r).abs() < 0.25).then_some(r as i64)
        };
        if let (Some(a), Some(b)) = (constant(&wz), constant(&ww)) {
            order = Some([a, b]);
        }
    }
    let ronkin_gradient = match order {
        Some(o) => [o[0] as f64, o[1] as f64],
        None => {
            let mut grad = [0.0; 2];
            let mut counted = 0usize;
            for k in 0..m {
                for l in 0..m {
                    let mut v = Cplx::new(0.0, 0.0);
                    let mut vz = Cplx::new(0.0, 0.0);
                    let mut vw = Cplx::new(0.0, 0.0);
                    for (r, (j, _)) in g.rows.iter().enumerate() {
                        let t = wp[r][l];
                        v += a[r][k] * t;
                        vz += da[r][k] * t;
                        vw += a[r][k] * t * *j as f64;
                    }
                    if v.norm() > 0.0 {
                        grad[0] += (vz / v).re;
                        grad[1] += (vw / v).re;
                        counted += 1;
                    }
                }
            }
            [grad[0] / counted.max(1) as f64, grad[1] / counted.max(1) as f64]
        }
    };
    TorusSample { x, y, min_abs, zero: order.is_none(), order, ronkin_gradient }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Membership {
    Inside,
    /// Outside; the complement component is identified by its order.
    Outside { order: [i64; 2] },
}

/// Whether `(x, y)` lies in the amoeba of `P` (boundary counts as inside).
pub fn amoeba_membership(p: &LaurentPoly<f64>, x: f64, y: f64, m: usize) -> Membership {
    match torus_sample(p, x, y, m).order {
        Some(order) => Membership::Outside { order },
        None => Membership::Inside,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Liquid,
    Frozen,
    Gaseous,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Liquid => "liquid",
            Phase::Frozen => "frozen",
            Phase::Gaseous => "gaseous",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PhasePoint {
    pub b: [f64; 2],
    /// Infinite-volume slope `-grad R`; on complement components this is minus the order.
    pub slope: [f64; 2],
    /// Exhaustive finite-N slope, when a slope model was supplied.
    pub finite_slope: Option<[f64; 2]>,
    pub phase: Phase,
    pub min_abs_p: f64,
    pub component: Option<usize>,
    pub order: Option<[i64; 2]>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanGrid {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    /// Grid points per axis.
    pub points: usize,
    /// Torus angles per circle.
    pub torus_samples: usize,
}

impl ScanGrid {
    pub fn square(half_width: f64, points: usize) -> Self {
        ScanGrid { lo: [-half_width; 2], hi: [half_width; 2], points, torus_samples: TORUS_SAMPLES }
    }

    pub fn coord(&self, i: usize, axis: usize) -> f64 {
        if self.points == 1 {
            return 0.5 * (self.lo[axis] + self.hi[axis]);
        }
        self.lo[axis] + (self.hi[axis] - self.lo[axis]) * i as f64 / (self.points - 1) as f64
    }

    pub fn step(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.points.max(2) - 1) as f64
    }

    fn doubled(&self) -> Self {
        let c = [0.5 * (self.lo[0] + self.hi[0]), 0.5 * (self.lo[1] + self.hi[1])];
        let h = [self.hi[0] - c[0], self.hi[1] - c[1]];
        ScanGrid { lo: [c[0] - 2.0 * h[0], c[1] - 2.0 * h[1]], hi: [c[0] + 2.0 * h[0], c[1] + 2.0 * h[1]], ..*self }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentInfo {
    pub id: usize,
    pub order: [i64; 2],
    pub size: usize,
    pub touches_edge: bool,
    pub bounded: bool,
    /// Order is a vertex of the Newton polygon (the unbounded components are exactly these).
    pub newton_vertex: bool,
    /// All grid points share the same slope.
    pub constant_slope: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseScan {
    pub grid: ScanGrid,
    /// Row-major with `B_y` outer and `B_x` inner.
    pub points: Vec<PhasePoint>,
    pub components: Vec<ComponentInfo>,
    pub newton: NewtonPolygonData,
}

#[derive(Clone, Debug, Serialize)]
pub struct NewtonPolygonData {
    pub vertices: Vec<(i64, i64)>,
    pub interior: Vec<(i64, i64)>,
}

impl From<&NewtonPolygon> for NewtonPolygonData {
    fn from(n: &NewtonPolygon) -> Self {
        NewtonPolygonData { vertices: n.vertices.clone(), interior: n.interior.clone() }
    }
}

/// Membership and orders over a grid.
fn sample_grid(g: &Grouped, grid: &ScanGrid) -> Vec<TorusSample> {
    let n = grid.points;
    (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (iy, ix) = (idx / n, idx % n);
            torus_sample_grouped(g, grid.coord(ix, 0), grid.coord(iy, 1), grid.torus_samples)
        })
        .collect()
}

/// 4-neighbour flood fill of outside points with equal order.
fn flood_fill(samples: &[TorusSample], n: usize) -> Vec<Option<usize>> {
    let mut label = vec![None; n * n];
    let mut next = 0;
    for s in 0..n * n {
        if label[s].is_some() || samples[s].order.is_none() {
            continue;
        }
        let order = samples[s].order;
        label[s] = Some(next);
        let mut stack = vec![s];
        while let Some(c) = stack.pop() {
            let (iy, ix) = (c / n, c % n);
            let mut nb = Vec::with_capacity(4);
            if ix > 0 {
                nb.push(c - 1);
            }
            if ix + 1 < n {
                nb.push(c + 1);
            }
            if iy > 0 {
                nb.push(c - n);
            }
            if iy + 1 < n {
                nb.push(c + n);
            }
            for d in nb {
                if label[d].is_none() && samples[d].order == order {
                    label[d] = Some(next);
                    stack.push(d);
                }
            }
        }
        next += 1;
    }
    label
}

fn on_edge(c: usize, n: usize) -> bool {
    let (iy, ix) = (c / n, c % n);
    ix == 0 || iy == 0 || ix + 1 == n || iy + 1 == n
}

/// Scans the amoeba of `p` over `grid`. Orders reaching the edge of the doubled window are
/// unbounded; every other component is gaseous.
pub fn phase_scan(p: &LaurentPoly<f64>, grid: ScanGrid, model: Option<&SlopeModel>) -> Result<PhaseScan> {
    if grid.points < 2 || grid.torus_samples < 4 {
        return Err(Error::InvalidInput("scan grid too coarse".into()));
    }
    let newton = newton_polygon(p)?;
    let grouped = Grouped::new(p);
    let n = grid.points;
    let samples = sample_grid(&grouped, &grid);
    let labels = flood_fill(&samples, n);

    let wide = grid.doubled();
    let wide_samples = sample_grid(&grouped, &wide);
    let wide_labels = flood_fill(&wide_samples, n);
    let mut unbounded_orders = Vec::new();
    for c in 0..n * n {
        if wide_labels[c].is_some() && on_edge(c, n) {
            let o = wide_samples[c].order.expect("labelled points have orders");
            if !unbounded_orders.contains(&o) {
                unbounded_orders.push(o);
            }
        }
    }

    let count = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut components: Vec<ComponentInfo> = (0..count)
        .map(|id| ComponentInfo {
            id,
            order: [0, 0],
            size: 0,
            touches_edge: false,
            bounded: false,
            newton_vertex: false,
            constant_slope: true,
        })
        .collect();
    for c in 0..n * n {
        if let Some(id) = labels[c] {
            let info = &mut components[id];
            let o = samples[c].order.expect("labelled points have orders");
            if info.size == 0 {
                info.order = o;
            } else if info.order != o {
                info.constant_slope = false;
            }
            info.size += 1;
            info.touches_edge |= on_edge(c, n);
        }
    }
    for info in &mut components {
        info.bounded = !info.touches_edge || !unbounded_orders.contains(&info.order);
        info.newton_vertex = newton.vertices.contains(&(info.order[0], info.order[1]));
    }

    let points = samples
        .iter()
        .enumerate()
        .map(|(c, s)| {
            let b = [s.x, s.y];
            let phase = match labels[c] {
                None => Phase::Liquid,
                Some(id) if components[id].bounded => Phase::Gaseous,
                Some(_) => Phase::Frozen,
            };
            PhasePoint {
                b,
                slope: [-s.ronkin_gradient[0], -s.ronkin_gradient[1]],
                finite_slope: model.map(|m| m.estimate(b).estimate),
                phase,
                min_abs_p: s.min_abs,
                component: labels[c],
                order: s.order,
            }
        })
        .collect();
    Ok(PhaseScan { grid, points, components, newton: (&newton).into() })
}

/// Characteristic polynomial of the fundamental domain in floating point.
pub fn fundamental_poly(g: &PeriodicGraph) -> Result<LaurentPoly<Rat>> {
    Ok(crate::kasteleyn::char_poly(&TorusInstance::new(g, 1)?)?.poly)
}

pub fn phase_scan_graph(g: &PeriodicGraph, grid: ScanGrid, model: Option<&SlopeModel>) -> Result<PhaseScan> {
    phase_scan(&fundamental_poly(g)?.to_f64(), grid, model)
}

impl PhaseScan {
    pub const CSV_HEADER: &'static str = "Bx,By,phase,slope_x,slope_y,min_absP,component_id";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for p in &self.points {
            let _ = writeln!(
                s,
                "{:.6},{:.6},{},{:.9},{:.9},{:.6e},{}",
                p.b[0],
                p.b[1],
                p.phase.name(),
                p.slope[0] + 0.0,
                p.slope[1] + 0.0,
                p.min_abs_p,
                p.component.map_or(String::new(), |c| c.to_string())
            );
        }
        s
    }

    pub fn bounded_components(&self) -> Vec<&ComponentInfo> {
        self.components.iter().filter(|c| c.bounded).collect()
    }

    pub fn point(&self, ix: usize, iy: usize) -> &PhasePoint {
        &self.points[iy * self.grid.points + ix]
    }

    /// Whether `b` lies within one grid diagonal of a point of component `id`.
    pub fn near_component(&self, id: usize, b: [f64; 2]) -> bool {
        let r = (self.grid.step(0).powi(2) + self.grid.step(1).powi(2)).sqrt() + 1e-12;
        self.points
            .iter()
            .any(|p| p.component == Some(id) && ((p.b[0] - b[0]).powi(2) + (p.b[1] - b[1]).powi(2)).sqrt() <= r)
    }

    /// Unit segments separating liquid grid cells from the rest, as SVG-ready polylines in
    /// `B` coordinates.
    pub fn boundary_polylines(&self) -> Vec<[[f64; 2]; 2]> {
        let n = self.grid.points;
        let (hx, hy) = (0.5 * self.grid.step(0), 0.5 * self.grid.step(1));
        let liquid = |ix: usize, iy: usize| self.point(ix, iy).phase == Phase::Liquid;
        let mut segs = Vec::new();
        for iy in 0..n {
            for ix in 0..n {
                let b = self.point(ix, iy).b;
                if ix + 1 < n && liquid(ix, iy) != liquid(ix + 1, iy) {
                    segs.push([[b[0] + hx, b[1] - hy], [b[0] + hx, b[1] + hy]]);
                }
                if iy + 1 < n && liquid(ix, iy) != liquid(ix, iy + 1) {
                    segs.push([[b[0] - hx, b[1] + hy], [b[0] + hx, b[1] + hy]]);
                }
            }
        }
        segs
    }

    /// Companion plot data: boundary polylines as SVG path strings plus component summary.
    pub fn plot_data(&self) -> Value {
        let paths: Vec<String> = self
            .boundary_polylines()
            .iter()
            .map(|[a, b]| format!("M {:.6} {:.6} L {:.6} {:.6}", a[0], a[1], b[0], b[1]))
            .collect();
        json!({
            "window": { "lo": self.grid.lo, "hi": self.grid.hi, "points": self.grid.points },
            "amoeba_boundary": paths,
            "components": self.components,
            "newton_polygon": self.newton,
            "note": "gaseous components carry zero slope: tree phase (conditional on condition (star))",
        })
    }

    /// Per component, the set of distinct slopes seen (rounded to 1e-6).
    pub fn component_slopes(&self) -> HashMap<usize, Vec<[i64; 2]>> {
        let mut m: HashMap<usize, Vec<[i64; 2]>> = HashMap::new();
        for p in &self.points {
            if let Some(id) = p.component {
                let s = [(p.slope[0] * 1e6).round() as i64, (p.slope[1] * 1e6).round() as i64];
                let v = m.entry(id).or_default();
                if !v.contains(&s) {
                    v.push(s);
                }
            }
        }
        m
    }
}
