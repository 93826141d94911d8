//! Connections, Laplacians with connection, incidence operators and the block identities
//! linking them to the Kasteleyn matrix.

pub mod kernel;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kasteleyn::{default_orientation, exponent_range, find_gauge, interpolate_exact, interpolate_float, Gauge};
use crate::kasteleyn::{kasteleyn_matrix, KasteleynOrientation};
use crate::lattice::double::{DoubleGraph, HEAD_END, LEFT_FACE, RIGHT_FACE, TAIL_END};
use crate::lattice::embedded::{edge_of, is_backward, rev, Embedded};
use crate::lattice::{PrimalGraph, TorusInstance, WiredInstance};
use crate::laurent::LaurentPoly;
use crate::numeric::{rat, rel_err, Cplx, Matrix, Rat, Scalar};
use crate::temperley::{cycle_class, enumerate_ocrsf, forest_cycles, normalize_class};

/// Parallel transport along every edge, stored for the forward half (tail to head).
#[derive(Clone, Debug, PartialEq)]
pub struct Connection<T> {
    pub fwd: Vec<T>,
}

impl<T: Scalar> Connection<T> {
    pub fn trivial(edges: usize) -> Self {
        Connection { fwd: vec![T::one(); edges] }
    }

    /// Transport `z^p w^q` from integer exponents per edge.
    pub fn from_exponents(exps: &[[i32; 2]], z: &T, w: &T) -> Result<Self> {
        if z.magnitude() == 0.0 || w.magnitude() == 0.0 {
            return Err(Error::InvalidInput("z and w must be nonzero".into()));
        }
        Ok(Connection { fwd: exps.iter().map(|e| z.powi(e[0] as i64) * w.powi(e[1] as i64)).collect() })
    }

    /// The connection of a torus generated by the reference dual cycles.
    pub fn from_paths(inst: &TorusInstance, z: &T, w: &T) -> Result<Self> {
        Self::from_exponents(&connection_exponents(&inst.double, &inst.paths.marking), z, w)
    }

    /// Same construction on the dual graph.
    pub fn dual_from_paths(inst: &TorusInstance, z: &T, w: &T) -> Result<Self> {
        Self::from_exponents(&dual_connection_exponents(&inst.double, &inst.paths.marking), z, w)
    }

    /// Transport along half-edge `h`, from its tail to its head.
    pub fn transport(&self, h: usize) -> T {
        let f = self.fwd[edge_of(h)].clone();
        if is_backward(h) {
            T::one() / f
        } else {
            f
        }
    }

    /// Holonomy collected by a directed cycle of half-edges.
    pub fn monodromy(&self, cycle: &[usize]) -> T {
        cycle.iter().fold(T::one(), |acc, &h| acc * self.transport(rev(h)))
    }

    /// Gauge transform by per-vertex units `g`.
    pub fn gauge(&self, emb: &Embedded, g: &[T]) -> Self {
        let fwd = self
            .fwd
            .iter()
            .enumerate()
            .map(|(e, f)| f.clone() * g[emb.edges[e].tail].clone() / g[emb.edges[e].head].clone())
            .collect();
        Connection { fwd }
    }
}

impl Connection<Cplx> {
    /// Magnetic field `B`: `z = e^(N B_x)`, `w = e^(N B_y)`.
    pub fn magnetic(inst: &TorusInstance, b: [f64; 2]) -> Result<Self> {
        let n = inst.n() as f64;
        let z = Cplx::new((n * b[0]).exp(), 0.0);
        let w = Cplx::new((n * b[1]).exp(), 0.0);
        Self::from_paths(inst, &z, &w)
    }
}

/// Exponents of the transport along every primal edge.
pub fn connection_exponents(d: &DoubleGraph, marking: &[[i32; 2]]) -> Vec<[i32; 2]> {
    (0..d.ne)
        .map(|e| {
            let (h, t) = (marking[4 * e + HEAD_END], marking[4 * e + TAIL_END]);
            [h[0] - t[0], h[1] - t[1]]
        })
        .collect()
}

/// Exponents of the transport along every dual edge (left face to right face).
pub fn dual_connection_exponents(d: &DoubleGraph, marking: &[[i32; 2]]) -> Vec<[i32; 2]> {
    (0..d.ne)
        .map(|e| {
            let (r, l) = (marking[4 * e + RIGHT_FACE], marking[4 * e + LEFT_FACE]);
            [r[0] - l[0], r[1] - l[1]]
        })
        .collect()
}

/// `Delta^Phi` over the kept vertices, together with the diagonal weight sums `D`.
#[derive(Clone, Debug)]
pub struct ConnectionLaplacian<T> {
    pub matrix: Matrix<T>,
    /// Graph vertex of every row.
    pub vertices: Vec<usize>,
    pub index_of: Vec<Option<usize>>,
    pub degree: Vec<T>,
}

impl<T: Scalar> ConnectionLaplacian<T> {
    /// Random-walk transition probability `p_{v,v'}` between kept vertices.
    pub fn transition(&self, v: usize, u: usize) -> T {
        let (i, j) = (self.index_of[v].unwrap(), self.index_of[u].unwrap());
        if i == j {
            return T::zero();
        }
        -self.matrix[(i, j)].clone() / self.degree[i].clone()
    }

    pub fn det(&self) -> Result<T> {
        self.matrix.det()
    }
}

/// Assembles `Delta f(v) = sum_u c_vu (f(v) - phi_uv f(u))`, dropping the listed vertices.
pub fn assemble<T: Scalar>(
    emb: &Embedded,
    w_fwd: &[Rat],
    w_bwd: &[Rat],
    c: &Connection<T>,
    dropped: &[usize],
) -> ConnectionLaplacian<T> {
    let nv = emb.vertex_count();
    let mut index_of = vec![None; nv];
    let mut vertices = Vec::new();
    for v in 0..nv {
        if !dropped.contains(&v) {
            index_of[v] = Some(vertices.len());
            vertices.push(v);
        }
    }
    let mut m = Matrix::zeros(vertices.len(), vertices.len());
    let mut degree = vec![T::zero(); vertices.len()];
    for h in 0..2 * emb.edge_count() {
        let (v, u) = (emb.tail(h), emb.head(h));
        let Some(i) = index_of[v] else { continue };
        let cw = T::from_rat(if is_backward(h) { &w_bwd[edge_of(h)] } else { &w_fwd[edge_of(h)] });
        degree[i] = degree[i].clone() + cw.clone();
        m.add_to(i, i, cw.clone());
        if let Some(j) = index_of[u] {
            m.add_to(i, j, -(cw * c.transport(rev(h))));
        }
    }
    ConnectionLaplacian { matrix: m, vertices, index_of, degree }
}

pub fn laplacian_matrix<T: Scalar>(p: &PrimalGraph, c: &Connection<T>, dropped: Option<usize>) -> ConnectionLaplacian<T> {
    let dropped: Vec<usize> = dropped.into_iter().collect();
    assemble(&p.emb, &p.w_fwd, &p.w_bwd, c, &dropped)
}

pub fn torus_laplacian<T: Scalar>(inst: &TorusInstance, z: &T, w: &T) -> Result<ConnectionLaplacian<T>> {
    Ok(laplacian_matrix(inst.primal(), &Connection::from_paths(inst, z, w)?, None))
}

/// `Delta~`: trivial connection, root removed.
pub fn wired_laplacian<T: Scalar>(w: &WiredInstance) -> ConnectionLaplacian<T> {
    laplacian_matrix(w.primal(), &Connection::trivial(w.primal().edge_count()), Some(w.root()))
}

fn unit_weights(n: usize) -> Vec<Rat> {
    vec![rat(1, 1); n]
}

/// Dual Laplacian with unit weights.
pub fn dual_laplacian<T: Scalar>(emb: &Embedded, c: &Connection<T>, dropped: Option<usize>) -> ConnectionLaplacian<T> {
    let ones = unit_weights(emb.edge_count());
    let dropped: Vec<usize> = dropped.into_iter().collect();
    assemble(emb, &ones, &ones, c, &dropped)
}

fn laplacian_row_exponents(inst: &TorusInstance) -> Vec<Vec<[i32; 2]>> {
    let emb = &inst.primal().emb;
    let psi = connection_exponents(&inst.double, &inst.paths.marking);
    let mut rows = vec![vec![[0, 0]]; emb.vertex_count()];
    for h in 0..2 * emb.edge_count() {
        let p = psi[edge_of(h)];
        let s = if is_backward(h) { 1 } else { -1 };
        rows[emb.tail(h)].push([s * p[0], s * p[1]]);
    }
    rows
}

/// `det Delta^Phi(z, w)` as an exact Laurent polynomial.
pub fn laplacian_char_poly(inst: &TorusInstance) -> Result<LaurentPoly<Rat>> {
    let range = exponent_range(&laplacian_row_exponents(inst));
    interpolate_exact(range, |z, w| torus_laplacian(inst, z, w)?.det())
}

pub fn laplacian_char_poly_float(inst: &TorusInstance) -> Result<LaurentPoly<f64>> {
    let range = exponent_range(&laplacian_row_exponents(inst));
    interpolate_float(range, |z, w| torus_laplacian(inst, &z, &w)?.det())
}

/// Incidence matrices of the primal and dual graphs built from the double graph.
///
/// `d` and `d_dual` have rows indexed by active white vertices (primal edges); `d_star` and
/// `d_star_dual` have rows indexed by active primal and dual vertices, in the order of `black`.
#[derive(Clone, Debug)]
pub struct IncidenceOps<T> {
    pub d: Matrix<T>,
    pub d_star: Matrix<T>,
    pub d_dual: Matrix<T>,
    pub d_star_dual: Matrix<T>,
    pub primal_rows: usize,
}

impl<T: Scalar> IncidenceOps<T> {
    pub fn new(
        dg: &DoubleGraph,
        o: &KasteleynOrientation,
        marking: Option<&[[i32; 2]]>,
        z: &T,
        w: &T,
    ) -> Result<Self> {
        let np = dg.black.iter().filter(|&&b| b < dg.nv).count();
        let nd = dg.black.len() - np;
        let nw = dg.white.len();
        let mut ops = IncidenceOps {
            d: Matrix::zeros(nw, np),
            d_star: Matrix::zeros(np, nw),
            d_dual: Matrix::zeros(nw, nd),
            d_star_dual: Matrix::zeros(nd, nw),
            primal_rows: np,
        };
        for de in 0..dg.edge_count() {
            if !dg.active_edge(de) {
                continue;
            }
            let b = dg.black_end(de);
            let r = dg.row_of[b].unwrap();
            let col = dg.col_of[dg.white_end(de)].unwrap();
            let mu = match marking {
                Some(m) => z.powi(m[de][0] as i64) * w.powi(m[de][1] as i64),
                None => T::one(),
            };
            let s = if o.sign[de] < 0 { -T::one() } else { T::one() };
            let star = s.clone() * T::from_rat(&dg.weight[de]) * mu.clone();
            let plain = s / mu;
            if b < dg.nv {
                ops.d_star.add_to(r, col, star);
                ops.d.add_to(col, r, plain);
            } else {
                ops.d_star_dual.add_to(r - np, col, star);
                ops.d_dual.add_to(col, r - np, plain);
            }
        }
        Ok(ops)
    }

    /// The stacked matrix `(d*, d*_dual)`.
    pub fn stacked_star(&self) -> Matrix<T> {
        let np = self.primal_rows;
        Matrix::from_fn(np + self.d_star_dual.rows(), self.d_star.cols(), |r, c| {
            if r < np {
                self.d_star[(r, c)].clone()
            } else {
                self.d_star_dual[(r - np, c)].clone()
            }
        })
    }

    /// `M = (d d_dual)`.
    pub fn m(&self) -> Matrix<T> {
        let np = self.primal_rows;
        Matrix::from_fn(self.d.rows(), np + self.d_dual.cols(), |r, c| {
            if c < np {
                self.d[(r, c)].clone()
            } else {
                self.d_dual[(r, c - np)].clone()
            }
        })
    }
}

fn residual<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> f64 {
    a.sub(b).max_abs()
}

fn block<T: Scalar>(m: &Matrix<T>, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Matrix<T> {
    m.select(&rows.collect::<Vec<_>>(), &cols.collect::<Vec<_>>())
}

#[derive(Clone, Debug, Serialize)]
pub struct FormanReport {
    pub lhs: String,
    pub rhs: String,
    pub forests: usize,
    pub rel_error: f64,
    pub equal: bool,
}

fn show<T: Scalar>(x: &T) -> String {
    let c = x.to_cplx();
    if T::EXACT {
        format!("{x:?}")
    } else {
        format!("{}", c)
    }
}

fn equal<T: Scalar>(a: &T, b: &T, tol: f64) -> bool {
    if T::EXACT {
        a == b
    } else {
        rel_err(a.to_cplx(), b.to_cplx()) <= tol
    }
}

/// `det Delta^Phi` against the sum over oriented cycle-rooted spanning forests.
pub fn verify_forman<T: Scalar>(p: &PrimalGraph, c: &Connection<T>, cap: usize) -> Result<FormanReport> {
    let lhs = laplacian_matrix(p, c, None).det()?;
    let forests = enumerate_ocrsf(&p.emb, cap)?;
    let mut rhs = T::zero();
    for f in &forests {
        let mut term: T = f.iter().flatten().fold(T::one(), |acc, &h| acc * T::from_rat(p.half_weight(h)));
        for cycle in forest_cycles(&p.emb, f) {
            term = term * (T::one() - c.monodromy(&cycle));
        }
        rhs = rhs + term;
    }
    Ok(FormanReport {
        rel_error: rel_err(lhs.to_cplx(), rhs.to_cplx()),
        equal: equal(&lhs, &rhs, 1e-9),
        lhs: show(&lhs),
        rhs: show(&rhs),
        forests: forests.len(),
    })
}

/// The grouped form `sum_F c(F) (1 - z^-n w^m)^k1 (1 - z^n w^-m)^(k-k1)`.
pub fn grouped_sum<T: Scalar>(p: &PrimalGraph, z: &T, w: &T, cap: usize) -> Result<T> {
    let mut total = T::zero();
    for f in enumerate_ocrsf(&p.emb, cap)? {
        let classes: Vec<[i64; 2]> = forest_cycles(&p.emb, &f).iter().map(|c| cycle_class(&p.emb, c)).collect();
        let first = *classes.first().ok_or_else(|| Error::Invariant("forest without cycles".into()))?;
        let [m, n] = normalize_class(first)?;
        let k1 = classes.iter().filter(|&&c| c == [m, n]).count();
        let k = classes.len();
        let plus = T::one() - z.powi(-n) * w.powi(m);
        let minus = T::one() - z.powi(n) * w.powi(-m);
        let weight: T = f.iter().flatten().fold(T::one(), |acc, &h| acc * T::from_rat(p.half_weight(h)));
        total = total + weight * plus.powi(k1 as i64) * minus.powi((k - k1) as i64);
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop31Report {
    pub gauge: (i64, i64, bool),
    /// `P(z, w)` and `det Delta^Phi` agree coefficientwise after the gauge.
    pub identity: bool,
    pub points: usize,
    pub max_point_error: f64,
    /// Grouped OCRSF form equals `det Delta^Phi` at the rational check points.
    pub grouped_form: bool,
    pub passed: bool,
}

/// Checks `P(z,w) = det Delta^Phi` up to a monomial, on the polynomial and at sample points.
pub fn verify_prop31(inst: &TorusInstance, samples: &[(Cplx, Cplx)], cap: usize) -> Result<Prop31Report> {
    let o = default_orientation(&inst.double, inst.primal())?;
    let raw = crate::kasteleyn::raw_char_poly(inst, &o)?;
    let lap = laplacian_char_poly(inst)?;
    let gauge = find_gauge(&raw, &lap);
    let identity = gauge.is_some();
    let g = gauge.unwrap_or(Gauge { a: 0, b: 0, negate: false });
    let mut max_err: f64 = 0.0;
    for &(z, w) in samples {
        let k = crate::kasteleyn::det_k(inst, &o, &z, &w)? * g.factor(z, w);
        let l = torus_laplacian(inst, &z, &w)?.det()?;
        max_err = max_err.max(rel_err(k, l));
    }
    let mut grouped_form = true;
    for (z, w) in [(rat(2, 3), rat(5, 7)), (rat(-3, 2), rat(4, 1))] {
        let lhs = torus_laplacian(inst, &z, &w)?.det()?;
        grouped_form &= grouped_sum(inst.primal(), &z, &w, cap)? == lhs;
    }
    Ok(Prop31Report {
        gauge: (g.a, g.b, g.negate),
        identity,
        points: samples.len(),
        max_point_error: max_err,
        grouped_form,
        passed: identity && grouped_form && max_err <= 1e-12,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockReport {
    /// `Delta = d* d`.
    pub eq37_residual: f64,
    /// `(d*, d*_dual)` against the Kasteleyn matrix.
    pub stacked_residual: f64,
    pub primal_block_residual: f64,
    pub dual_block_residual: f64,
    /// Largest entry of the lower-left block of `K M`.
    pub zero_block_max: f64,
    /// `(K^-1)^V Delta~ - d~`; `None` when `K` is singular.
    pub inverse_residual: Option<f64>,
    pub singular: bool,
    pub singular_expected: bool,
    pub passed: bool,
}

fn tolerance<T: Scalar>() -> f64 {
    if T::EXACT {
        0.0
    } else {
        1e-9
    }
}

fn block_report<T: Scalar>(
    dg: &DoubleGraph,
    o: &KasteleynOrientation,
    marking: Option<&[[i32; 2]]>,
    z: &T,
    w: &T,
    lap: &ConnectionLaplacian<T>,
    dual_lap: &ConnectionLaplacian<T>,
) -> Result<BlockReport> {
    let ops = IncidenceOps::new(dg, o, marking, z, w)?;
    let k = kasteleyn_matrix(dg, o, marking, z, w)?;
    let np = ops.primal_rows;
    let nb = k.rows();
    let km = k.mul(&ops.m())?;
    let eq37_residual = residual(&ops.d_star.mul(&ops.d)?, &lap.matrix);
    let stacked_residual = residual(&ops.stacked_star(), &k);
    let primal_block_residual = residual(&block(&km, 0..np, 0..np), &lap.matrix);
    let dual_block_residual = residual(&block(&km, np..nb, np..nb), &dual_lap.matrix);
    let zero_block_max = block(&km, np..nb, 0..np).max_abs();
    let (inverse_residual, singular) = match k.inverse() {
        Ok(inv) => {
            let kv = block(&inv, 0..inv.rows(), 0..np);
            (Some(residual(&kv.mul(&lap.matrix)?, &ops.d)), false)
        }
        Err(Error::Singular) => (None, true),
        Err(e) => return Err(e),
    };
    let singular_expected = singular && lap.det()?.magnitude() <= 1e-9;
    let tol = tolerance::<T>();
    let scale = lap.matrix.max_abs().max(1.0);
    let ok = |r: f64| r <= tol * scale;
    let passed = ok(eq37_residual)
        && ok(stacked_residual)
        && ok(primal_block_residual)
        && ok(dual_block_residual)
        && ok(zero_block_max)
        && inverse_residual.map_or(singular_expected, |r| r <= if T::EXACT { 0.0 } else { 1e-7 * scale });
    Ok(BlockReport {
        eq37_residual,
        stacked_residual,
        primal_block_residual,
        dual_block_residual,
        zero_block_max,
        inverse_residual,
        singular,
        singular_expected,
        passed,
    })
}

/// Block identity `K M = [[Delta, *], [0, Delta_dual]]` on a torus at `(z, w)`.
pub fn verify_block_identity<T: Scalar>(inst: &TorusInstance, z: &T, w: &T) -> Result<BlockReport> {
    let o = default_orientation(&inst.double, inst.primal())?;
    let lap = torus_laplacian(inst, z, w)?;
    let dual_lap = dual_laplacian(&inst.dual.emb, &Connection::dual_from_paths(inst, z, w)?, None);
    block_report(&inst.double, &o, Some(&inst.paths.marking), z, w, &lap, &dual_lap)
}

/// The wired analogue with `r` and `r*` removed and trivial connection.
pub fn verify_block_identity_wired<T: Scalar>(w: &WiredInstance) -> Result<BlockReport> {
    let o = default_orientation(&w.double, w.primal())?;
    let lap = wired_laplacian::<T>(w);
    let dual_lap = dual_laplacian(&w.dual.emb, &Connection::trivial(w.dual.emb.edge_count()), Some(w.wired.root_face));
    block_report(&w.double, &o, None, &T::one(), &T::one(), &lap, &dual_lap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::PeriodicGraph;

    fn uniform(n: usize) -> TorusInstance {
        TorusInstance::new(&PeriodicGraph::uniform_grid(), n).unwrap()
    }

    fn drifted() -> PeriodicGraph {
        PeriodicGraph::drifted_grid(rat(1, 1), rat(2, 1), rat(3, 1), rat(5, 1))
    }

    #[test]
    fn unit_torus_laplacian_is_the_symbol() {
        let t = uniform(1);
        let (z, w) = (rat(2, 1), rat(3, 1));
        let l = torus_laplacian(&t, &z, &w).unwrap();
        let expected = rat(4, 1) - rat(2, 1) - rat(1, 2) - rat(3, 1) - rat(1, 3);
        assert_eq!(l.matrix[(0, 0)], expected);
    }

    #[test]
    fn trivial_connection_row_sums_vanish() {
        let t = TorusInstance::new(&drifted(), 2).unwrap();
        let l = laplacian_matrix(t.primal(), &Connection::<Rat>::trivial(t.primal().edge_count()), None);
        for r in 0..l.matrix.rows() {
            let s: Rat = (0..l.matrix.cols()).map(|c| l.matrix[(r, c)].clone()).sum();
            assert_eq!(s, rat(0, 1));
        }
    }

    #[test]
    fn contractible_face_has_trivial_monodromy() {
        let t = uniform(3);
        let c = Connection::from_paths(&t, &rat(2, 1), &rat(3, 1)).unwrap();
        for face in &t.primal().faces.cycles {
            assert_eq!(c.monodromy(face), rat(1, 1));
        }
    }

    #[test]
    fn laplacian_char_poly_of_uniform_unit_torus() {
        let p = laplacian_char_poly(&uniform(1)).unwrap();
        assert_eq!(p.to_string(), "-z^-1 - w^-1 + 4 - w - z");
    }
}
