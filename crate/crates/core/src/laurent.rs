//! Two-variable Laurent polynomials and their Newton polygons.

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numeric::{format_rational, parse_rational, Cplx, Rat};

pub trait Coefficient: Clone + Debug + PartialEq + Zero + std::ops::Neg<Output = Self> {
    fn to_f64(&self) -> f64;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Option<Self>;
}

impl Coefficient for Rat {
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_json(&self) -> Value {
        match self.to_integer().to_i64() {
            Some(i) if self.is_integer() => json!(i),
            _ => json!(format_rational(self)),
        }
    }

    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::Number(n) => n.as_i64().map(|i| Rat::from_integer(i.into())).or_else(|| Rat::from_float(n.as_f64()?)),
            Value::String(s) => parse_rational(s),
            _ => None,
        }
    }
}

impl Coefficient for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_json(&self) -> Value {
        json!(self)
    }

    fn from_json(v: &Value) -> Option<Self> {
        v.as_f64()
    }
}

/// `sum c_{ij} z^i w^j` with finitely many nonzero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPoly<C> {
    pub terms: BTreeMap<(i64, i64), C>,
}

impl<C: Coefficient> LaurentPoly<C> {
    pub fn from_terms(terms: impl IntoIterator<Item = ((i64, i64), C)>) -> Self {
        let mut p = LaurentPoly { terms: BTreeMap::new() };
        for (k, c) in terms {
            let e = p.terms.entry(k).or_insert_with(C::zero);
            *e = e.clone() + c;
        }
        p.terms.retain(|_, c| !c.is_zero());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, i: i64, j: i64) -> C {
        self.terms.get(&(i, j)).cloned().unwrap_or_else(C::zero)
    }

    pub fn support(&self) -> Vec<(i64, i64)> {
        self.terms.keys().copied().collect()
    }

    pub fn eval(&self, z: Cplx, w: Cplx) -> Cplx {
        self.terms
            .iter()
            .map(|(&(i, j), c)| z.powi(i as i32) * w.powi(j as i32) * c.to_f64())
            .sum()
    }

    /// Multiplies by `sign * z^a w^b`.
    pub fn shifted(&self, a: i64, b: i64, negate: bool) -> Self {
        LaurentPoly {
            terms: self
                .terms
                .iter()
                .map(|(&(i, j), c)| ((i + a, j + b), if negate { -c.clone() } else { c.clone() }))
                .collect(),
        }
    }

    pub fn sum_of_coefficients(&self) -> C {
        self.terms.values().fold(C::zero(), |a, c| a + c.clone())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms.iter().map(|(&(i, j), c)| json!({"i": i, "j": j, "c": c.to_json()})).collect(),
        )
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let arr = v.as_array().ok_or_else(|| Error::InvalidInput("polynomial must be a JSON array".into()))?;
        let mut terms = Vec::new();
        for t in arr {
            let i = t["i"].as_i64().ok_or_else(|| Error::InvalidInput("term without integer i".into()))?;
            let j = t["j"].as_i64().ok_or_else(|| Error::InvalidInput("term without integer j".into()))?;
            let c = C::from_json(&t["c"]).ok_or_else(|| Error::InvalidInput("term with bad coefficient".into()))?;
            terms.push(((i, j), c));
        }
        Ok(Self::from_terms(terms))
    }

    /// Smallest and largest exponents of `z` and `w`.
    pub fn exponent_box(&self) -> Option<[(i64, i64); 2]> {
        let mut it = self.terms.keys();
        let &(i0, j0) = it.next()?;
        let mut b = [(i0, i0), (j0, j0)];
        for &(i, j) in it {
            b[0] = (b[0].0.min(i), b[0].1.max(i));
            b[1] = (b[1].0.min(j), b[1].1.max(j));
        }
        Some(b)
    }
}

impl LaurentPoly<Rat> {
    /// Partial derivatives at `(1, 1)`.
    pub fn gradient_at_one(&self) -> (Rat, Rat) {
        let mut gz = Rat::zero();
        let mut gw = Rat::zero();
        for (&(i, j), c) in &self.terms {
            gz += c * Rat::from_integer(i.into());
            gw += c * Rat::from_integer(j.into());
        }
        (gz, gw)
    }

    pub fn eval_exact(&self, z: &Rat, w: &Rat) -> Rat {
        use crate::numeric::Scalar;
        self.terms.iter().map(|(&(i, j), c)| c * Scalar::powi(z, i) * Scalar::powi(w, j)).sum()
    }

    pub fn to_f64(&self) -> LaurentPoly<f64> {
        LaurentPoly { terms: self.terms.iter().map(|(&k, c)| (k, Coefficient::to_f64(c))).collect() }
    }
}

/// Human-readable rendering such as `4 - z - z^-1 - w - w^-1`.
impl std::fmt::Display for LaurentPoly<Rat> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(i, j), c) in &self.terms {
            let neg = c < &Rat::zero();
            let mag = if neg { -c.clone() } else { c.clone() };
            let mono = [(i, "z"), (j, "w")]
                .iter()
                .filter(|(e, _)| *e != 0)
                .map(|&(e, v)| if e == 1 { v.to_string() } else { format!("{v}^{e}") })
                .collect::<Vec<_>>()
                .join("*");
            let coef = format_rational(&mag);
            let body = match (mono.is_empty(), coef == "1") {
                (true, _) => coef,
                (false, true) => mono,
                (false, false) => format!("{coef}*{mono}"),
            };
            match (first, neg) {
                (true, false) => write!(f, "{body}")?,
                (true, true) => write!(f, "-{body}")?,
                (false, false) => write!(f, " + {body}")?,
                (false, true) => write!(f, " - {body}")?,
            }
            first = false;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonPolygon {
    /// Hull vertices in counterclockwise order starting from the lexicographically smallest.
    pub vertices: Vec<(i64, i64)>,
    pub interior: Vec<(i64, i64)>,
    /// Boundary lattice points, vertices included.
    pub boundary: Vec<(i64, i64)>,
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(p: (i64, i64), a: (i64, i64), b: (i64, i64)) -> bool {
    cross(a, b, p) == 0 && p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

impl NewtonPolygon {
    pub fn contains(&self, p: (i64, i64)) -> bool {
        self.boundary.contains(&p) || self.interior.contains(&p)
    }

    /// Whether a real point lies in the closed hull.
    pub fn contains_real(&self, p: (f64, f64)) -> bool {
        let v = &self.vertices;
        match v.len() {
            1 => (p.0 - v[0].0 as f64).abs() < 1e-9 && (p.1 - v[0].1 as f64).abs() < 1e-9,
            2 => {
                let (a, b) = (v[0], v[1]);
                let d = ((b.0 - a.0) as f64, (b.1 - a.1) as f64);
                let q = (p.0 - a.0 as f64, p.1 - a.1 as f64);
                let t = (q.0 * d.0 + q.1 * d.1) / (d.0 * d.0 + d.1 * d.1);
                (q.0 * d.1 - q.1 * d.0).abs() < 1e-9 && (-1e-9..=1.0 + 1e-9).contains(&t)
            }
            _ => (0..v.len()).all(|k| {
                let a = v[k];
                let b = v[(k + 1) % v.len()];
                let c = (b.0 - a.0) as f64 * (p.1 - a.1 as f64) - (b.1 - a.1) as f64 * (p.0 - a.0 as f64);
                c >= -1e-9
            }),
        }
    }
}

/// Convex hull of the exponent support with its lattice points classified.
pub fn newton_polygon<C: Coefficient>(p: &LaurentPoly<C>) -> Result<NewtonPolygon> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let pts = p.support();
    let mut lower: Vec<(i64, i64)> = Vec::new();
    for &q in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<(i64, i64)> = Vec::new();
    for &q in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    let mut vertices = lower;
    vertices.extend(upper);
    if vertices.is_empty() {
        vertices.push(pts[0]);
    }
    let bbox = p.exponent_box().expect("nonzero polynomial");
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for i in bbox[0].0..=bbox[0].1 {
        for j in bbox[1].0..=bbox[1].1 {
            let q = (i, j);
            let n = vertices.len();
            let on_edge = match n {
                1 => q == vertices[0],
                2 => on_segment(q, vertices[0], vertices[1]),
                _ => (0..n).any(|k| on_segment(q, vertices[k], vertices[(k + 1) % n])),
            };
            if on_edge {
                boundary.push(q);
            } else if n >= 3 && (0..n).all(|k| cross(vertices[k], vertices[(k + 1) % n], q) > 0) {
                interior.push(q);
            }
        }
    }
    Ok(NewtonPolygon { vertices, interior, boundary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    fn square() -> LaurentPoly<Rat> {
        LaurentPoly::from_terms([
            ((0, 0), rat(4, 1)),
            ((1, 0), rat(-1, 1)),
            ((-1, 0), rat(-1, 1)),
            ((0, 1), rat(-1, 1)),
            ((0, -1), rat(-1, 1)),
        ])
    }

    #[test]
    fn square_hull() {
        let np = newton_polygon(&square()).unwrap();
        assert_eq!(np.vertices, vec![(-1, 0), (0, -1), (1, 0), (0, 1)]);
        assert_eq!(np.interior, vec![(0, 0)]);
        assert_eq!(np.boundary.len(), 4);
        assert!(np.contains_real((0.25, 0.25)));
        assert!(!np.contains_real((0.75, 0.75)));
    }

    #[test]
    fn degenerate_hulls() {
        let mono = LaurentPoly::from_terms([((2, -1), rat(3, 1))]);
        let np = newton_polygon(&mono).unwrap();
        assert_eq!(np.vertices, vec![(2, -1)]);
        assert_eq!(np.boundary, vec![(2, -1)]);
        let seg = LaurentPoly::from_terms([((0, 0), rat(1, 1)), ((2, 0), rat(1, 1))]);
        let np = newton_polygon(&seg).unwrap();
        assert_eq!(np.boundary, vec![(0, 0), (1, 0), (2, 0)]);
        assert!(newton_polygon(&LaurentPoly::<Rat>::from_terms([])).is_err());
    }

    #[test]
    fn json_roundtrip_and_display() {
        let p = square().shifted(0, 0, false);
        let back = LaurentPoly::<Rat>::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
        assert_eq!(p.to_string(), "-z^-1 - w^-1 + 4 - w - z");
        assert_eq!(p.eval_exact(&rat(1, 1), &rat(1, 1)), rat(0, 1));
    }
}
