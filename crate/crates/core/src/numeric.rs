//! Scalars and dense matrices used by every linear-algebra routine in the crate.
//!
//! Two arithmetic modes are supported: exact rationals ([`Rat`]) and complex floats ([`Cplx`]).
//! Determinants use fraction-free Bareiss elimination in exact mode and partially pivoted LU
//! elimination in float mode.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;
pub type Cplx = Complex64;

/// Field element usable in matrix computations.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const EXACT: bool;

    fn from_rat(r: &Rat) -> Self;

    /// Magnitude used for pivot selection; `0.0` only for exact zero.
    fn magnitude(&self) -> f64;

    fn to_cplx(&self) -> Cplx;

    fn powi(&self, e: i64) -> Self {
        let mut acc = Self::one();
        let base = if e < 0 { Self::one() / self.clone() } else { self.clone() };
        for _ in 0..e.unsigned_abs() {
            acc = acc * base.clone();
        }
        acc
    }

    fn from_i64(v: i64) -> Self {
        Self::from_rat(&Rat::from_integer(BigInt::from(v)))
    }
}

impl Scalar for Rat {
    const EXACT: bool = true;

    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }

    fn magnitude(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.abs().to_f64().unwrap_or(f64::MAX).max(f64::MIN_POSITIVE)
        }
    }

    fn to_cplx(&self) -> Cplx {
        Cplx::new(rat_to_f64(self), 0.0)
    }
}

impl Scalar for Cplx {
    const EXACT: bool = false;

    fn from_rat(r: &Rat) -> Self {
        Cplx::new(rat_to_f64(r), 0.0)
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn to_cplx(&self) -> Cplx {
        *self
    }

    fn powi(&self, e: i64) -> Self {
        Complex64::powi(self, e as i32)
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p/q"`, `"p"` or a decimal literal into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rat> {
    let t = text.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Rat::new(p, q));
    }
    if let Ok(p) = t.parse::<BigInt>() {
        return Some(Rat::from_integer(p));
    }
    let f: f64 = t.parse().ok()?;
    Rat::from_float(f)
}

pub fn serialize_rat<S: serde::Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

/// Renders a rational as `"p/q"` or `"p"`.
pub fn format_rational(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        Ok(())
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: T) {
        let cell = &mut self[(r, c)];
        *cell = cell.clone() + v;
    }

    pub fn mul(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out.add_to(i, j, a.clone() * b.clone());
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect(),
        }
    }

    pub fn scale_rows(&self, factors: &[T]) -> Matrix<T> {
        Matrix::from_fn(self.rows, self.cols, |r, c| factors[r].clone() * self[(r, c)].clone())
    }

    pub fn scale_cols(&self, factors: &[T]) -> Matrix<T> {
        Matrix::from_fn(self.rows, self.cols, |r, c| self[(r, c)].clone() * factors[c].clone())
    }

    /// Sub-matrix keeping the listed rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix<T> {
        Matrix::from_fn(rows.len(), cols.len(), |r, c| self[(rows[r], cols[c])].clone())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(Scalar::magnitude).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Matrix<T> {
        Matrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn det(&self) -> Result<T> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!("determinant of {}x{} matrix", self.rows, self.cols)));
        }
        if self.rows == 0 {
            return Ok(T::one());
        }
        Ok(if T::EXACT { self.det_bareiss() } else { self.det_lu() })
    }

    fn det_bareiss(&self) -> T {
        let n = self.rows;
        let mut a = self.clone();
        let mut negate = false;
        let mut prev = T::one();
        for k in 0..n {
            let Some(p) = (k..n).find(|&i| !a[(i, k)].is_zero()) else {
                return T::zero();
            };
            if p != k {
                a.swap_rows(p, k);
                negate = !negate;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (a[(i, j)].clone() * a[(k, k)].clone() - a[(i, k)].clone() * a[(k, j)].clone())
                        / prev.clone();
                    a[(i, j)] = v;
                }
            }
            prev = a[(k, k)].clone();
        }
        let d = a[(n - 1, n - 1)].clone();
        if negate {
            -d
        } else {
            d
        }
    }

    fn det_lu(&self) -> T {
        let n = self.rows;
        let mut a = self.clone();
        let mut det = T::one();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[(x, k)].magnitude().total_cmp(&a[(y, k)].magnitude()))
                .expect("non-empty pivot range");
            if a[(p, k)].magnitude() == 0.0 {
                return T::zero();
            }
            if p != k {
                a.swap_rows(p, k);
                det = -det;
            }
            let pivot = a[(k, k)].clone();
            det = det * pivot.clone();
            for i in k + 1..n {
                let f = a[(i, k)].clone() / pivot.clone();
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let v = a[(i, j)].clone() - f.clone() * a[(k, j)].clone();
                    a[(i, j)] = v;
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Solves `self * X = rhs`; fails on a singular (or, in float mode, numerically singular) matrix.
    pub fn solve(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        let n = self.rows;
        if self.cols != n || rhs.rows != n {
            return Err(Error::Dimension(format!(
                "solve with {}x{} system and {}x{} right-hand side",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let m = rhs.cols;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let scale = self.max_abs().max(1.0);
        for k in 0..n {
            let p = if T::EXACT {
                (k..n).find(|&i| !a[(i, k)].is_zero())
            } else {
                (k..n).max_by(|&x, &y| a[(x, k)].magnitude().total_cmp(&a[(y, k)].magnitude()))
            };
            let p = match p {
                Some(p) if a[(p, k)].magnitude() > if T::EXACT { 0.0 } else { 1e-13 * scale } => p,
                _ => return Err(Error::Singular),
            };
            a.swap_rows(p, k);
            b.swap_rows(p, k);
            let inv = T::one() / a[(k, k)].clone();
            for i in 0..n {
                if i == k || a[(i, k)].is_zero() {
                    continue;
                }
                let f = a[(i, k)].clone() * inv.clone();
                for j in k..n {
                    let v = a[(i, j)].clone() - f.clone() * a[(k, j)].clone();
                    a[(i, j)] = v;
                }
                for j in 0..m {
                    let v = b[(i, j)].clone() - f.clone() * b[(k, j)].clone();
                    b[(i, j)] = v;
                }
            }
        }
        for i in 0..n {
            let inv = T::one() / a[(i, i)].clone();
            for j in 0..m {
                let v = b[(i, j)].clone() * inv.clone();
                b[(i, j)] = v;
            }
        }
        Ok(b)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        self.solve(&Matrix::identity(self.rows))
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

/// Relative distance `|a - b| / max(1, |a|, |b|)`.
pub fn rel_err(a: Cplx, b: Cplx) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rat {
        Rat::from_integer(BigInt::from(n))
    }

    #[test]
    fn bareiss_matches_cofactor_expansion() {
        let m = Matrix::from_fn(3, 3, |r, c| q([[2, -1, 0], [-1, 2, -1], [0, -1, 2]][r][c]));
        assert_eq!(m.det().unwrap(), q(4));
        let f = m.map(|x| x.to_cplx());
        assert!((f.det().unwrap() - Cplx::new(4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn singular_pivot_swap() {
        let m = Matrix::from_fn(2, 2, |r, c| q([[0, 1], [1, 0]][r][c]));
        assert_eq!(m.det().unwrap(), q(-1));
        let z = Matrix::from_fn(2, 2, |r, c| q([[1, 2], [2, 4]][r][c]));
        assert_eq!(z.det().unwrap(), q(0));
        assert!(matches!(z.inverse(), Err(Error::Singular)));
    }

    #[test]
    fn inverse_roundtrip_exact() {
        let m = Matrix::from_fn(3, 3, |r, c| q([[1, 2, 0], [3, -1, 4], [0, 5, 6]][r][c]));
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("3/6"), Some(rat(1, 2)));
        assert_eq!(parse_rational("-4"), Some(q(-4)));
        assert_eq!(parse_rational("0.25"), Some(rat(1, 4)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(format_rational(&rat(6, 4)), "3/2");
    }
}
