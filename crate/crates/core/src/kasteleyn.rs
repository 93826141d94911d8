//! Kasteleyn orientations and matrices, partition functions and characteristic polynomials.

use std::f64::consts::PI;

use num_traits::Signed;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::double::{DoubleGraph, HEAD_END, LEFT_FACE, RIGHT_FACE, TAIL_END};
use crate::lattice::embedded::is_backward;
use crate::lattice::{PrimalGraph, TorusInstance};
use crate::laurent::LaurentPoly;
use crate::numeric::{rat, Cplx, Matrix, Rat, Scalar};

/// Sign of every double edge: `+1` when oriented from its black end to its white end.
#[derive(Clone, Debug, PartialEq)]
pub struct KasteleynOrientation {
    /// Primal edges oriented head to tail instead of tail to head.
    pub flipped: Vec<bool>,
    pub sign: Vec<i8>,
}

/// Primal orientation from lower vertex id to higher vertex id.
pub fn default_flips(p: &PrimalGraph) -> Vec<bool> {
    p.emb.edges.iter().map(|e| e.tail > e.head).collect()
}

/// Orients the double graph from a primal orientation and verifies the odd-clockwise rule.
pub fn orient(d: &DoubleGraph, flipped: &[bool]) -> Result<KasteleynOrientation> {
    if flipped.len() != d.ne {
        return Err(Error::Dimension(format!("{} flips for {} primal edges", flipped.len(), d.ne)));
    }
    let mut sign = vec![0i8; 4 * d.ne];
    for (e, &f) in flipped.iter().enumerate() {
        let s: i8 = if f { -1 } else { 1 };
        sign[4 * e + TAIL_END] = -s;
        sign[4 * e + HEAD_END] = s;
        sign[4 * e + LEFT_FACE] = -s;
        sign[4 * e + RIGHT_FACE] = s;
    }
    check_orientation(d, &sign)?;
    Ok(KasteleynOrientation { flipped: flipped.to_vec(), sign })
}

pub fn default_orientation(d: &DoubleGraph, p: &PrimalGraph) -> Result<KasteleynOrientation> {
    orient(d, &default_flips(p))
}

/// Number of edges co-oriented with the clockwise traversal of face `f`.
pub fn clockwise_cooriented(d: &DoubleGraph, sign: &[i8], f: usize) -> usize {
    // Faces are traced counterclockwise, so clockwise traversal runs each half-edge backwards;
    // a backward half runs white to black, i.e. against a `+1` edge's reversal.
    d.faces.cycles[f]
        .iter()
        .filter(|&&h| {
            let s = sign[h >> 1];
            (s > 0) == is_backward(h)
        })
        .count()
}

pub fn check_orientation(d: &DoubleGraph, sign: &[i8]) -> Result<()> {
    for f in 0..d.faces.count() {
        if d.active_face(f) && clockwise_cooriented(d, sign, f) % 2 == 0 {
            return Err(Error::NotKasteleyn { face: f });
        }
    }
    Ok(())
}

/// `K(z, w)` with rows indexed by active black vertices and columns by active white vertices.
pub fn kasteleyn_matrix<T: Scalar>(
    d: &DoubleGraph,
    o: &KasteleynOrientation,
    marking: Option<&[[i32; 2]]>,
    z: &T,
    w: &T,
) -> Result<Matrix<T>> {
    if !d.is_balanced() {
        return Err(Error::Unbalanced { black: d.black.len(), white: d.white.len() });
    }
    if z.magnitude() == 0.0 || w.magnitude() == 0.0 {
        return Err(Error::InvalidInput("z and w must be nonzero".into()));
    }
    let mut k = Matrix::zeros(d.black.len(), d.white.len());
    for de in 0..d.edge_count() {
        if !d.active_edge(de) {
            continue;
        }
        let r = d.row_of[d.black_end(de)].expect("active black");
        let c = d.col_of[d.white_end(de)].expect("active white");
        let mut v = T::from_rat(&d.weight[de]);
        if o.sign[de] < 0 {
            v = -v;
        }
        if let Some(m) = marking {
            v = v * z.powi(m[de][0] as i64) * w.powi(m[de][1] as i64);
        }
        k.add_to(r, c, v);
    }
    Ok(k)
}

/// `det K(z, w)` of a torus instance.
pub fn det_k<T: Scalar>(inst: &TorusInstance, o: &KasteleynOrientation, z: &T, w: &T) -> Result<T> {
    kasteleyn_matrix(&inst.double, o, Some(&inst.paths.marking), z, w)?.det()
}

/// The four `det K^(theta, tau)` in the order `(0,0), (0,1), (1,0), (1,1)`.
pub fn theta_tau_dets(inst: &TorusInstance, o: &KasteleynOrientation) -> Result<[Rat; 4]> {
    let pm = |b: bool| if b { rat(-1, 1) } else { rat(1, 1) };
    let mut out: [Rat; 4] = Default::default();
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = det_k(inst, o, &pm(k & 2 != 0), &pm(k & 1 != 0))?;
    }
    Ok(out)
}

/// The eight sign patterns with one or three minus signs, in a fixed order.
pub fn sign_patterns() -> Vec<[i8; 4]> {
    let mut v = Vec::new();
    for mask in 0u8..16 {
        let minus = mask.count_ones();
        if minus == 1 || minus == 3 {
            v.push([0, 1, 2, 3].map(|i| if mask & (1 << i) != 0 { -1 } else { 1 }));
        }
    }
    v
}

pub fn signed_combination(dets: &[Rat; 4], pattern: &[i8; 4]) -> Rat {
    let s: Rat = dets.iter().zip(pattern).map(|(d, &p)| if p < 0 { -d.clone() } else { d.clone() }).sum();
    s / rat(2, 1)
}

#[derive(Clone, Debug)]
pub struct PartitionFunction {
    pub value: Rat,
    pub pattern: [i8; 4],
    pub dets: [Rat; 4],
    /// Every pattern reproducing the enumerated value.
    pub matching_patterns: Vec<[i8; 4]>,
}

/// Calibrated signed combination of the four `det K^(theta, tau)`.
pub fn partition_function(inst: &TorusInstance, cap: usize) -> Result<PartitionFunction> {
    let o = default_orientation(&inst.double, inst.primal())?;
    let dets = theta_tau_dets(inst, &o)?;
    let target = crate::temperley::dimer_partition_sum(&inst.double, cap)?;
    let matching: Vec<[i8; 4]> =
        sign_patterns().into_iter().filter(|p| signed_combination(&dets, p) == target).collect();
    let pattern = *matching.first().ok_or(Error::Calibration)?;
    Ok(PartitionFunction { value: signed_combination(&dets, &pattern), pattern, dets, matching_patterns: matching })
}

/// Range of total exponents of a matrix whose entries are monomials in `z`, `w`:
/// every determinant term picks one entry per row.
pub fn exponent_range(rows: &[Vec<[i32; 2]>]) -> [(i64, i64); 2] {
    let mut range = [(0i64, 0i64); 2];
    for row in rows {
        if row.is_empty() {
            continue;
        }
        for (axis, r) in range.iter_mut().enumerate() {
            r.0 += row.iter().map(|m| m[axis] as i64).min().unwrap();
            r.1 += row.iter().map(|m| m[axis] as i64).max().unwrap();
        }
    }
    range
}

fn k_row_exponents(inst: &TorusInstance) -> Vec<Vec<[i32; 2]>> {
    let d = &inst.double;
    let mut rows = vec![Vec::new(); d.black.len()];
    for de in 0..d.edge_count() {
        if d.active_edge(de) {
            rows[d.row_of[d.black_end(de)].unwrap()].push(inst.paths.marking[de]);
        }
    }
    rows
}

/// Recovers a Laurent polynomial from exact evaluations at integer points.
pub fn interpolate_exact<F>(range: [(i64, i64); 2], eval: F) -> Result<LaurentPoly<Rat>>
where
    F: Fn(&Rat, &Rat) -> Result<Rat> + Sync,
{
    let mut range = range;
    for attempt in 0..2 {
        let mz = (range[0].1 - range[0].0 + 1) as usize;
        let mw = (range[1].1 - range[1].0 + 1) as usize;
        let zs: Vec<Rat> = (0..mz).map(|k| rat(k as i64 + 1, 1)).collect();
        let ws: Vec<Rat> = (0..mw).map(|k| rat(k as i64 + 1, 1)).collect();
        let points: Vec<(usize, usize)> = (0..mz).flat_map(|a| (0..mw).map(move |b| (a, b))).collect();
        let values: Vec<Rat> = points
            .par_iter()
            .map(|&(a, b)| {
                let v = eval(&zs[a], &ws[b])?;
                Ok(v * Scalar::powi(&zs[a], -range[0].0) * Scalar::powi(&ws[b], -range[1].0))
            })
            .collect::<Result<_>>()?;
        let vals = Matrix::from_fn(mz, mw, |a, b| values[a * mw + b].clone());
        let vz = Matrix::from_fn(mz, mz, |k, e| Scalar::powi(&zs[k], e as i64));
        let vw = Matrix::from_fn(mw, mw, |k, e| Scalar::powi(&ws[k], e as i64));
        let x = vz.solve(&vals)?;
        let coeffs = vw.solve(&x.transpose())?.transpose();
        let poly = LaurentPoly::from_terms(
            (0..mz)
                .flat_map(|a| (0..mw).map(move |b| (a, b)))
                .map(|(a, b)| ((a as i64 + range[0].0, b as i64 + range[1].0), coeffs[(a, b)].clone())),
        );
        let (cz, cw) = (rat(-3, 7), rat(5, 11));
        if poly.eval_exact(&cz, &cw) == eval(&cz, &cw)? {
            return Ok(poly);
        }
        if attempt == 0 {
            range = [(range[0].0 - 1, range[0].1 + 1), (range[1].0 - 1, range[1].1 + 1)];
        }
    }
    Err(Error::Interpolation("degree bound too small".into()))
}

/// Recovers real coefficients from evaluations on a grid of roots of unity.
pub fn interpolate_float<F>(range: [(i64, i64); 2], eval: F) -> Result<LaurentPoly<f64>>
where
    F: Fn(Cplx, Cplx) -> Result<Cplx> + Sync,
{
    let mut range = range;
    for attempt in 0..2 {
        let mz = (range[0].1 - range[0].0 + 1) as usize;
        let mw = (range[1].1 - range[1].0 + 1) as usize;
        let root = |k: usize, m: usize| Cplx::from_polar(1.0, 2.0 * PI * k as f64 / m as f64);
        let points: Vec<(usize, usize)> = (0..mz).flat_map(|a| (0..mw).map(move |b| (a, b))).collect();
        let values: Vec<Cplx> = points
            .par_iter()
            .map(|&(a, b)| {
                let (z, w) = (root(a, mz), root(b, mw));
                Ok(eval(z, w)? * z.powi(-range[0].0 as i32) * w.powi(-range[1].0 as i32))
            })
            .collect::<Result<_>>()?;
        let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        let mut terms = Vec::new();
        for e in 0..mz {
            for f in 0..mw {
                let mut c = Cplx::new(0.0, 0.0);
                for (idx, &(a, b)) in points.iter().enumerate() {
                    c += values[idx] * root(a, mz).powi(-(e as i32)) * root(b, mw).powi(-(f as i32));
                }
                c /= (mz * mw) as f64;
                if c.norm() > 1e-10 * scale {
                    terms.push(((e as i64 + range[0].0, f as i64 + range[1].0), c.re));
                }
            }
        }
        let poly = LaurentPoly::from_terms(terms);
        let probe = (Cplx::new(0.7, 0.3), Cplx::new(-0.4, 1.1));
        let want = eval(probe.0, probe.1)?;
        if (poly.eval(probe.0, probe.1) - want).norm() <= 1e-8 * want.norm().max(scale) {
            return Ok(poly);
        }
        if attempt == 0 {
            range = [(range[0].0 - 1, range[0].1 + 1), (range[1].0 - 1, range[1].1 + 1)];
        }
    }
    Err(Error::Interpolation("degree bound too small".into()))
}

/// `det K(z, w)` as an exact Laurent polynomial, before gauge normalisation.
pub fn raw_char_poly(inst: &TorusInstance, o: &KasteleynOrientation) -> Result<LaurentPoly<Rat>> {
    let range = exponent_range(&k_row_exponents(inst));
    interpolate_exact(range, |z, w| det_k(inst, o, z, w))
}

pub fn raw_char_poly_float(inst: &TorusInstance, o: &KasteleynOrientation) -> Result<LaurentPoly<f64>> {
    let range = exponent_range(&k_row_exponents(inst));
    interpolate_float(range, |z, w| det_k(inst, o, &z, &w))
}

/// Monomial gauge `P_target = (-1)^negate z^a w^b P_source`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gauge {
    pub a: i64,
    pub b: i64,
    pub negate: bool,
}

impl Gauge {
    pub fn apply<C: crate::laurent::Coefficient>(&self, p: &LaurentPoly<C>) -> LaurentPoly<C> {
        p.shifted(self.a, self.b, self.negate)
    }

    pub fn factor(&self, z: Cplx, w: Cplx) -> Cplx {
        let s = if self.negate { -1.0 } else { 1.0 };
        z.powi(self.a as i32) * w.powi(self.b as i32) * s
    }
}

/// Finds the monomial gauge carrying `source` onto `target`, if one exists.
pub fn find_gauge(source: &LaurentPoly<Rat>, target: &LaurentPoly<Rat>) -> Option<Gauge> {
    let (&(si, sj), sc) = source.terms.iter().next()?;
    let (&(ti, tj), tc) = target.terms.iter().next()?;
    let g = Gauge { a: ti - si, b: tj - sj, negate: sc.is_positive() != tc.is_positive() };
    (g.apply(source) == *target).then_some(g)
}

#[derive(Clone, Debug)]
pub struct CharPoly {
    /// `P(z, w)` in the gauge where it equals `det` of the connection Laplacian.
    pub poly: LaurentPoly<Rat>,
    /// Gauge carrying raw `det K(z, w)` onto `poly`.
    pub gauge: Gauge,
    pub raw: LaurentPoly<Rat>,
}

/// The characteristic polynomial, normalised to the Laplacian gauge.
pub fn char_poly(inst: &TorusInstance) -> Result<CharPoly> {
    let o = default_orientation(&inst.double, inst.primal())?;
    let raw = raw_char_poly(inst, &o)?;
    if raw.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let lap = crate::laplacian::laplacian_char_poly(inst)?;
    let gauge = find_gauge(&raw, &lap).ok_or_else(|| {
        Error::Invariant("det K(z,w) and det of the connection Laplacian differ beyond a monomial".into())
    })?;
    Ok(CharPoly { poly: gauge.apply(&raw), gauge, raw })
}

/// Float-mode characteristic polynomial in the same gauge.
pub fn char_poly_float(inst: &TorusInstance) -> Result<LaurentPoly<f64>> {
    let o = default_orientation(&inst.double, inst.primal())?;
    let raw = raw_char_poly_float(inst, &o)?;
    let lap = crate::laplacian::laplacian_char_poly_float(inst)?;
    let (&(si, sj), sc) = raw.terms.iter().next().ok_or(Error::ZeroPolynomial)?;
    let (&(ti, tj), tc) = lap.terms.iter().next().ok_or(Error::ZeroPolynomial)?;
    let g = Gauge { a: ti - si, b: tj - sj, negate: (*sc > 0.0) != (*tc > 0.0) };
    Ok(g.apply(&raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::PeriodicGraph;

    fn inst(g: &PeriodicGraph, n: usize) -> TorusInstance {
        TorusInstance::new(g, n).unwrap()
    }

    #[test]
    fn every_face_is_odd_for_any_primal_orientation() {
        let g = PeriodicGraph::drifted_grid(rat(1, 1), rat(2, 1), rat(3, 1), rat(4, 1));
        for n in 1..4 {
            let t = inst(&g, n);
            let ne = t.double.ne;
            for mask in 0..(1u32 << ne.min(6)) {
                let flips: Vec<bool> = (0..ne).map(|e| e < 6 && mask & (1 << e) != 0).collect();
                orient(&t.double, &flips).unwrap();
            }
        }
    }

    #[test]
    fn single_quadrilateral_cases_are_odd() {
        // The four orientation cases of the two primal edges meeting at a face corner.
        let t = inst(&PeriodicGraph::uniform_grid(), 2);
        for f in 0..t.double.faces.count() {
            let edges: Vec<usize> = t.double.faces.cycles[f].iter().map(|&h| (h >> 1) / 4).collect();
            for case in 0..4u32 {
                let mut flips = vec![false; t.double.ne];
                flips[edges[0]] ^= case & 1 != 0;
                flips[edges[2]] ^= case & 2 != 0;
                let o = orient(&t.double, &flips).unwrap();
                assert_eq!(clockwise_cooriented(&t.double, &o.sign, f) % 2, 1);
            }
        }
    }

    #[test]
    fn even_orientation_is_rejected() {
        let t = inst(&PeriodicGraph::uniform_grid(), 2);
        let mut sign = orient(&t.double, &vec![false; t.double.ne]).unwrap().sign;
        sign[0] = -sign[0];
        assert!(matches!(check_orientation(&t.double, &sign), Err(Error::NotKasteleyn { .. })));
    }

    #[test]
    fn unmarked_entries_are_signed_weights() {
        let g = PeriodicGraph::drifted_grid(rat(1, 1), rat(2, 1), rat(3, 1), rat(4, 1));
        let t = inst(&g, 2);
        let o = default_orientation(&t.double, t.primal()).unwrap();
        let k = kasteleyn_matrix(&t.double, &o, Some(&t.paths.marking), &rat(2, 1), &rat(3, 1)).unwrap();
        let plain = kasteleyn_matrix(&t.double, &o, None, &rat(1, 1), &rat(1, 1)).unwrap();
        for de in 0..t.double.edge_count() {
            if t.paths.marking[de] == [0, 0] {
                let r = t.double.row_of[t.double.black_end(de)].unwrap();
                let c = t.double.col_of[t.double.white_end(de)].unwrap();
                assert_eq!(k[(r, c)], plain[(r, c)]);
                assert_eq!(plain[(r, c)].abs(), t.double.weight[de]);
            }
        }
    }

    #[test]
    fn exponent_range_sums_rows() {
        let rows = vec![vec![[0, 0], [1, 0]], vec![[-1, 1], [0, 0]]];
        assert_eq!(exponent_range(&rows), [(-1, 1), (0, 1)]);
    }

    #[test]
    fn interpolation_recovers_known_polynomial() {
        let p = LaurentPoly::from_terms([((0, 0), rat(4, 1)), ((1, 0), rat(-1, 1)), ((-1, 1), rat(2, 3))]);
        let q = interpolate_exact([(-1, 1), (0, 1)], |z, w| Ok(p.eval_exact(z, w))).unwrap();
        assert_eq!(q, p);
        let pf = p.to_f64();
        let qf = interpolate_float([(-1, 1), (0, 1)], |z, w| Ok(pf.eval(z, w))).unwrap();
        for (k, c) in &pf.terms {
            assert!((qf.terms[k] - c).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_patterns_have_odd_minus_count() {
        let p = sign_patterns();
        assert_eq!(p.len(), 8);
        assert!(p.iter().all(|s| s.iter().filter(|&&x| x < 0).count() % 2 == 1));
    }
}
