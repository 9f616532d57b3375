//! Scalars, dense matrices, minors and the positivity / isotropy predicates.
//!
//! Matrix storage is 0-based. Plücker coordinates are keyed by 1-based
//! column labels, matching how cells and twistors are written elsewhere.

use std::fmt::{self, Debug};
use std::ops::{Add, Div, Mul, Neg, Sub};

use itertools::Itertools;
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::ser::{Serialize, Serializer};
use serde::de::{Deserialize, Deserializer};
use serde_json::Value;
use thiserror::Error;

use crate::dd::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index {index} out of bounds for size {size}")]
    OutOfBounds { index: usize, size: usize },
    #[error("index set {0:?} is not strictly increasing")]
    Unsorted(Vec<usize>),
    #[error("matrix is rank deficient")]
    RankDeficient,
    #[error("expected an even number of columns, got {0}")]
    OddColumns(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Default tolerances; `ORTHOTILE_TOL` overrides them (see [`Tolerances::from_env`]).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// relative tolerance for zero tests (isotropy, membership, signs)
    pub zero: f64,
    /// tolerance for projective row-span comparisons
    pub span: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { zero: 1e-9, span: 1e-7 }
    }
}

impl Tolerances {
    /// Reads `ORTHOTILE_TOL`: either a single number (used for both fields)
    /// or a comma list like `zero=1e-10,span=1e-6`.
    pub fn from_env() -> Result<Self, MatError> {
        match std::env::var("ORTHOTILE_TOL") {
            Ok(s) => Self::parse(&s),
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn parse(s: &str) -> Result<Self, MatError> {
        let mut t = Self::default();
        let s = s.trim();
        if let Ok(v) = s.parse::<f64>() {
            t.zero = v;
            t.span = v;
            return Ok(t);
        }
        for part in s.split(',') {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| MatError::Parse(format!("bad tolerance item {part:?}")))?;
            let v: f64 = val
                .trim()
                .parse()
                .map_err(|_| MatError::Parse(format!("bad tolerance value {val:?}")))?;
            match key.trim() {
                "zero" => t.zero = v,
                "span" => t.span = v,
                other => return Err(MatError::Parse(format!("unknown tolerance {other:?}"))),
            }
        }
        Ok(t)
    }
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const EXACT: bool;
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// Exactly zero on the exact backend; `|x| <= tol` on floats.
    fn is_zero_tol(&self, tol: f64) -> bool;
    fn abs(&self) -> Self;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Option<Self>;
    /// Determinant of a row-major `n x n` block.
    fn det_in_place(a: Vec<Self>, n: usize) -> Self;
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero_tol(&self, tol: f64) -> bool {
        f64::abs(*self) <= tol
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn to_json(&self) -> Value {
        serde_json::json!(*self)
    }
    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => s.parse().ok(),
            _ => None,
        }
    }
    /// LU with partial pivoting.
    fn det_in_place(mut a: Vec<f64>, n: usize) -> f64 {
        let mut det = 1.0;
        for c in 0..n {
            let mut p = c;
            let mut best = a[c * n + c].abs();
            for r in c + 1..n {
                let v = a[r * n + c].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if p != c {
                for j in 0..n {
                    a.swap(c * n + j, p * n + j);
                }
                det = -det;
            }
            let piv = a[c * n + c];
            det *= piv;
            for r in c + 1..n {
                let f = a[r * n + c] / piv;
                if f != 0.0 {
                    for j in c + 1..n {
                        a[r * n + j] -= f * a[c * n + j];
                    }
                }
            }
        }
        det
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_zero_tol(&self, _tol: f64) -> bool {
        Zero::is_zero(self)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::String(s) => parse_rational(s).ok(),
            Value::Number(n) => n.as_i64().map(<Self as Scalar>::from_i64),
            _ => None,
        }
    }
    /// Bareiss fraction-free elimination.
    fn det_in_place(mut a: Vec<BigRational>, n: usize) -> BigRational {
        if n == 0 {
            return One::one();
        }
        let mut sign = false;
        let mut prev: BigRational = One::one();
        for c in 0..n - 1 {
            if Zero::is_zero(&a[c * n + c]) {
                let Some(p) = (c + 1..n).find(|&r| !Zero::is_zero(&a[r * n + c])) else {
                    return Zero::zero();
                };
                for j in 0..n {
                    a.swap(c * n + j, p * n + j);
                }
                sign = !sign;
            }
            for r in c + 1..n {
                for j in c + 1..n {
                    let v = (&a[r * n + j] * &a[c * n + c] - &a[r * n + c] * &a[c * n + j]) / &prev;
                    a[r * n + j] = v;
                }
            }
            prev = a[c * n + c].clone();
        }
        let d = a[n * n - 1].clone();
        if sign {
            -d
        } else {
            d
        }
    }
}

/// Parses `"p/q"`, an integer, or a finite decimal like `"-1.25"`.
pub fn parse_rational(s: &str) -> Result<BigRational, MatError> {
    let s = s.trim();
    let bad = || MatError::Parse(format!("not a rational: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if Zero::is_zero(&q) {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let digits = format!("{}{}", ip.trim_start_matches(['-', '+']), fp);
        let num: BigInt = digits.parse().map_err(|_| bad())?;
        let den = num::pow(BigInt::from(10), fp.len());
        let r = BigRational::new(num, den);
        return Ok(if neg { -r } else { r });
    }
    let p: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(p))
}

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|x| format!("{x:?}")).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
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

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, MatError> {
        if data.len() != rows * cols {
            return Err(MatError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, MatError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(MatError::Dimension("ragged rows".into()));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    /// Builds a matrix from small integers, handy for fixtures.
    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let v = rows.iter().map(|r| r.iter().map(|&x| T::from_i64(x)).collect()).collect();
        Self::from_rows(v).expect("ragged literal")
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn rows_vec(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(|x| x.to_f64())
    }

    pub fn mul(&self, other: &Matrix<T>) -> Result<Matrix<T>, MatError> {
        if self.cols != other.rows {
            return Err(MatError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out: Matrix<T> = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero_tol(0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out[(i, j)].clone() + a.clone() * other[(k, j)].clone();
                    out[(i, j)] = v;
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    /// Rows stacked on top of each other.
    pub fn vstack(&self, other: &Matrix<T>) -> Result<Self, MatError> {
        if self.cols != other.cols && self.rows > 0 && other.rows > 0 {
            return Err(MatError::Dimension("vstack column mismatch".into()));
        }
        let cols = if self.rows == 0 { other.cols } else { self.cols };
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        Ok(Matrix { rows: self.rows + other.rows, cols, data })
    }

    /// Submatrix on 0-based, strictly increasing row / column index sets.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Result<Self, MatError> {
        check_indices(rows, self.rows)?;
        check_indices(cols, self.cols)?;
        Ok(Self::from_fn(rows.len(), cols.len(), |r, c| self[(rows[r], cols[c])].clone()))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self, MatError> {
        let all: Vec<usize> = (0..self.cols).collect();
        self.select(rows, &all)
    }

    pub fn select_cols(&self, cols: &[usize]) -> Result<Self, MatError> {
        let all: Vec<usize> = (0..self.rows).collect();
        self.select(&all, cols)
    }

    pub fn det(&self) -> Result<T, MatError> {
        if self.rows != self.cols {
            return Err(MatError::Dimension(format!("det of {}x{}", self.rows, self.cols)));
        }
        Ok(T::det_in_place(self.data.clone(), self.rows))
    }

    /// Largest absolute entry, as f64.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
    }

    /// Gauss-Jordan inverse with partial pivoting (largest magnitude pivot).
    pub fn inverse(&self) -> Result<Self, MatError> {
        let n = self.rows;
        if n != self.cols {
            return Err(MatError::Dimension(format!("inverse of {}x{}", self.rows, self.cols)));
        }
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for c in 0..n {
            let p = (c..n)
                .max_by(|&x, &y| a[(x, c)].to_f64().abs().total_cmp(&a[(y, c)].to_f64().abs()))
                .ok_or(MatError::RankDeficient)?;
            if a[(p, c)].is_zero_tol(0.0) {
                return Err(MatError::RankDeficient);
            }
            for j in 0..n {
                a.data.swap(c * n + j, p * n + j);
                inv.data.swap(c * n + j, p * n + j);
            }
            let piv = a[(c, c)].clone();
            for j in 0..n {
                a[(c, j)] = a[(c, j)].clone() / piv.clone();
                inv[(c, j)] = inv[(c, j)].clone() / piv.clone();
            }
            for r in 0..n {
                if r == c || a[(r, c)].is_zero_tol(0.0) {
                    continue;
                }
                let f = a[(r, c)].clone();
                for j in 0..n {
                    a[(r, j)] = a[(r, j)].clone() - f.clone() * a[(c, j)].clone();
                    inv[(r, j)] = inv[(r, j)].clone() - f.clone() * inv[(c, j)].clone();
                }
            }
        }
        Ok(inv)
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

impl<T: Scalar> Serialize for Matrix<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Value>> =
            (0..self.rows).map(|r| self.row(r).iter().map(Scalar::to_json).collect()).collect();
        rows.serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Matrix<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<Value>> = Vec::deserialize(d)?;
        let parsed: Option<Vec<Vec<T>>> =
            rows.iter().map(|r| r.iter().map(T::from_json).collect()).collect();
        let parsed = parsed.ok_or_else(|| serde::de::Error::custom("bad matrix entry"))?;
        Matrix::from_rows(parsed).map_err(serde::de::Error::custom)
    }
}

fn check_indices(idx: &[usize], size: usize) -> Result<(), MatError> {
    for w in idx.windows(2) {
        if w[0] >= w[1] {
            return Err(MatError::Unsorted(idx.to_vec()));
        }
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= size) {
        return Err(MatError::OutOfBounds { index: bad, size });
    }
    Ok(())
}

/// `det(M[rows, cols])` with 0-based sorted index sets; the empty minor is 1.
pub fn minor<T: Scalar>(m: &Matrix<T>, rows: &[usize], cols: &[usize]) -> Result<T, MatError> {
    if rows.len() != cols.len() {
        return Err(MatError::Dimension(format!(
            "{} rows vs {} columns in minor",
            rows.len(),
            cols.len()
        )));
    }
    m.select(rows, cols)?.det()
}

/// Maximal minor `Δ_I(M)` on the 1-based column labels `labels`.
pub fn plucker<T: Scalar>(m: &Matrix<T>, labels: &[usize]) -> Result<T, MatError> {
    let rows: Vec<usize> = (0..m.nrows()).collect();
    let cols = labels_to_index(labels)?;
    minor(m, &rows, &cols)
}

fn labels_to_index(labels: &[usize]) -> Result<Vec<usize>, MatError> {
    labels
        .iter()
        .map(|&l| l.checked_sub(1).ok_or(MatError::OutOfBounds { index: 0, size: 0 }))
        .collect()
}

/// All maximal minors of a `k x n` matrix, keyed by 1-based sorted label sets
/// in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct PluckerVector<T> {
    pub k: usize,
    pub n: usize,
    pub coords: Vec<(Vec<usize>, T)>,
}

impl<T: Scalar> PluckerVector<T> {
    pub fn get(&self, labels: &[usize]) -> Option<&T> {
        self.coords.iter().find(|(l, _)| l == labels).map(|(_, v)| v)
    }

    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.coords.iter().map(|(_, v)| v)
    }
}

pub fn plucker_vector<T: Scalar>(m: &Matrix<T>) -> Result<PluckerVector<T>, MatError> {
    plucker_vector_tol(m, 1e-9)
}

pub fn plucker_vector_tol<T: Scalar>(m: &Matrix<T>, tol: f64) -> Result<PluckerVector<T>, MatError> {
    let (k, n) = m.shape();
    if k > n {
        return Err(MatError::Dimension(format!("{k} rows exceed {n} columns")));
    }
    let rows: Vec<usize> = (0..k).collect();
    let mut coords = Vec::new();
    let mut biggest = 0.0f64;
    for cols in (0..n).combinations(k) {
        let v = minor(m, &rows, &cols)?;
        biggest = biggest.max(v.to_f64().abs());
        coords.push((cols.iter().map(|c| c + 1).collect(), v));
    }
    let scale = row_norm_product(m);
    let dead = if T::EXACT { biggest == 0.0 } else { biggest <= tol * scale };
    if dead {
        return Err(MatError::RankDeficient);
    }
    Ok(PluckerVector { k, n, coords })
}

/// Orthonormal basis of the row span (Gram-Schmidt, two passes); `None` if
/// a row is dependent on the previous ones to relative precision `tol`.
pub fn orthonormal_rows<T: Real>(m: &Matrix<T>, tol: f64) -> Option<Matrix<T>> {
    let (k, n) = m.shape();
    let mut out: Vec<Vec<T>> = Vec::with_capacity(k);
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + *x * *y);
    for r in 0..k {
        let mut v = m.row(r).to_vec();
        let norm0 = dot(&v, &v).sqrt().to_f64();
        for _ in 0..2 {
            for q in &out {
                let d = dot(&v, q);
                for (x, y) in v.iter_mut().zip(q) {
                    *x = *x - d * *y;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if !(norm.to_f64() > tol * norm0) {
            return None;
        }
        out.push(v.into_iter().map(|x| x / norm).collect());
    }
    Matrix::from_vec(k, n, out.concat()).ok()
}

/// Product of Euclidean row norms, the Hadamard bound on any maximal minor.
pub fn row_norm_product<T: Scalar>(m: &Matrix<T>) -> f64 {
    (0..m.nrows())
        .map(|r| m.row(r).iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt())
        .product::<f64>()
        .max(f64::MIN_POSITIVE)
}

/// Diagonal sign of the η form on 1-based label `i`: `+1` for odd, `-1` for even.
pub fn eta_sign(i: usize) -> i64 {
    if i % 2 == 1 {
        1
    } else {
        -1
    }
}

/// η = diag(+1, -1, +1, ...), of even size `n`.
pub fn eta<T: Scalar>(n: usize) -> Result<Matrix<T>, MatError> {
    if n % 2 == 1 {
        return Err(MatError::OddColumns(n));
    }
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = T::from_i64(eta_sign(i + 1));
    }
    Ok(m)
}

/// Right-multiplies by η without building it.
pub fn times_eta<T: Scalar>(m: &Matrix<T>) -> Matrix<T> {
    Matrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        if c % 2 == 0 {
            m[(r, c)].clone()
        } else {
            -m[(r, c)].clone()
        }
    })
}

/// `C η Cᵀ`.
pub fn eta_gram<T: Scalar>(c: &Matrix<T>) -> Result<Matrix<T>, MatError> {
    if c.ncols() % 2 == 1 {
        return Err(MatError::OddColumns(c.ncols()));
    }
    times_eta(c).mul(&c.transpose())
}

/// Whether `C η Cᵀ = 0`, to `tol` relative to the largest squared row norm.
pub fn is_eta_isotropic<T: Scalar>(c: &Matrix<T>, tol: f64) -> Result<bool, MatError> {
    let g = eta_gram(c)?;
    if T::EXACT {
        return Ok((0..g.nrows()).all(|r| g.row(r).iter().all(|x| x.is_zero_tol(0.0))));
    }
    let scale = (0..c.nrows())
        .map(|r| c.row(r).iter().map(|x| x.to_f64().powi(2)).sum::<f64>())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    Ok(g.max_abs() <= tol * scale)
}

fn positive_with_scale<T: Scalar>(v: &T, scale: f64, tol: f64) -> bool {
    if T::EXACT {
        v.to_f64() > 0.0 && !v.is_zero_tol(0.0)
    } else {
        v.to_f64() > tol * scale
    }
}

/// All maximal minors strictly positive. For a tall matrix the maximal minors
/// run over row subsets, for a wide one over column subsets.
pub fn is_positive_matrix<T: Scalar>(m: &Matrix<T>, tol: f64) -> bool {
    let wide = if m.nrows() > m.ncols() { m.transpose() } else { m.clone() };
    let (k, n) = wide.shape();
    if k == 0 {
        return true;
    }
    let rows: Vec<usize> = (0..k).collect();
    let scale = row_norm_product(&wide);
    (0..n).combinations(k).all(|cols| match minor(&wide, &rows, &cols) {
        Ok(v) => positive_with_scale(&v, scale, tol),
        Err(_) => false,
    })
}

/// Smallest maximal minor divided by the Hadamard bound (negative if some minor is).
pub fn min_relative_maximal_minor(m: &Matrix<f64>) -> f64 {
    let wide = if m.nrows() > m.ncols() { m.transpose() } else { m.clone() };
    let (k, n) = wide.shape();
    let rows: Vec<usize> = (0..k).collect();
    let scale = row_norm_product(&wide);
    (0..n)
        .combinations(k)
        .map(|cols| minor(&wide, &rows, &cols).unwrap_or(f64::NAN) / scale)
        .fold(f64::INFINITY, f64::min)
}

/// All minors of all orders strictly positive.
pub fn is_totally_positive<T: Scalar>(m: &Matrix<T>, tol: f64) -> Result<bool, MatError> {
    let (r, c) = m.shape();
    if r != c {
        return Err(MatError::Dimension(format!("{r}x{c} is not square")));
    }
    Ok(min_relative_minor(m)? > if T::EXACT { 0.0 } else { tol })
}

/// Smallest minor (any order) relative to the Hadamard bound of its rows.
pub fn min_relative_minor<T: Scalar>(m: &Matrix<T>) -> Result<f64, MatError> {
    let n = m.nrows().min(m.ncols());
    let mut worst = f64::INFINITY;
    for size in 1..=n {
        for rows in (0..m.nrows()).combinations(size) {
            for cols in (0..m.ncols()).combinations(size) {
                let sub = m.select(&rows, &cols)?;
                let v = sub.det()?.to_f64();
                let rel = if T::EXACT { v.signum() * v.abs().min(1.0) } else { v / row_norm_product(&sub) };
                worst = worst.min(rel);
            }
        }
    }
    Ok(worst)
}

/// Unit-normalised Plücker vector, sign fixed so the largest entry is positive.
pub fn normalized_plucker(m: &Matrix<f64>, tol: f64) -> Result<Vec<f64>, MatError> {
    let p = plucker_vector_tol(m, tol)?;
    let v: Vec<f64> = p.values().copied().collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let lead = v.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
    let s = lead.signum() / norm;
    Ok(v.into_iter().map(|x| x * s).collect())
}

/// Projective distance between two row spans: max entry gap between the
/// normalised Plücker vectors, after aligning their overall sign.
pub fn row_span_distance(a: &Matrix<f64>, b: &Matrix<f64>, tol: f64) -> Result<f64, MatError> {
    if a.shape() != b.shape() {
        return Err(MatError::Dimension(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let pa = plucker_vector_tol(a, tol)?;
    let pb = plucker_vector_tol(b, tol)?;
    let va: Vec<f64> = pa.values().copied().collect();
    let vb: Vec<f64> = pb.values().copied().collect();
    let na = va.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = vb.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
    let s = if dot < 0.0 { -1.0 } else { 1.0 };
    Ok(va.iter().zip(&vb).map(|(x, y)| (x / na - s * y / nb).abs()).fold(0.0, f64::max))
}

pub fn row_span_equal(a: &Matrix<f64>, b: &Matrix<f64>, tol: f64) -> Result<bool, MatError> {
    Ok(row_span_distance(a, b, tol.min(1e-9))? <= tol)
}

/// Exact row-span equality: Plücker vectors proportional.
pub fn row_span_equal_exact(a: &Matrix<BigRational>, b: &Matrix<BigRational>) -> Result<bool, MatError> {
    let pa = plucker_vector(a)?;
    let pb = plucker_vector(b)?;
    let (i, x) = pa
        .coords
        .iter()
        .enumerate()
        .find(|(_, (_, v))| !Zero::is_zero(v))
        .map(|(i, (_, v))| (i, v.clone()))
        .ok_or(MatError::RankDeficient)?;
    let y = pb.coords[i].1.clone();
    if Zero::is_zero(&y) {
        return Ok(false);
    }
    Ok(pa.coords.iter().zip(&pb.coords).all(|((_, u), (_, w))| u.clone() * y.clone() == w.clone() * x.clone()))
}

/// Numerical rank by singular values, relative to the largest one.
pub fn rank(m: &Matrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = to_nalgebra(m).singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * top).count()
}

pub fn to_nalgebra(m: &Matrix<f64>) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

pub fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Matrix<f64> {
    Matrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type Q = BigRational;

    fn q(n: i64) -> Q {
        <Q as Scalar>::from_i64(n)
    }

    #[test]
    fn identity_minor_is_one() {
        let id = Matrix::<Q>::identity(3);
        assert_eq!(minor(&id, &[0, 1], &[0, 1]).unwrap(), q(1));
        assert_eq!(minor(&id, &[], &[]).unwrap(), q(1));
    }

    #[test]
    fn k1_point_pluckers() {
        let c = Matrix::<Q>::from_i64_rows(&[&[1, 1]]);
        let p = plucker_vector(&c).unwrap();
        assert_eq!(p.get(&[1]), Some(&q(1)));
        assert_eq!(p.get(&[2]), Some(&q(1)));
    }

    #[test]
    fn minor_errors() {
        let id = Matrix::<f64>::identity(3);
        assert!(matches!(minor(&id, &[0], &[0, 1]), Err(MatError::Dimension(_))));
        assert!(matches!(minor(&id, &[0, 3], &[0, 1]), Err(MatError::OutOfBounds { .. })));
        assert!(matches!(minor(&id, &[1, 0], &[0, 1]), Err(MatError::Unsorted(_))));
    }

    #[test]
    fn rank_deficient_plucker() {
        let m = Matrix::<f64>::from_i64_rows(&[&[1, 2, 3], &[2, 4, 6]]);
        assert_eq!(plucker_vector(&m).unwrap_err(), MatError::RankDeficient);
    }

    #[test]
    fn vandermonde_is_positive() {
        let lam = Matrix::<f64>::from_fn(8, 6, |i, j| ((i + 1) as f64).powi(j as i32));
        assert!(is_positive_matrix(&lam, 1e-12));
        let lam_q = Matrix::<Q>::from_fn(8, 6, |i, j| q(((i + 1) as i64).pow(j as u32)));
        assert!(is_positive_matrix(&lam_q, 0.0));
    }

    #[test]
    fn padded_identity_is_not_positive() {
        let m = Matrix::<f64>::from_i64_rows(&[&[1, 0], &[0, 1], &[0, 0]]);
        assert!(!is_positive_matrix(&m, 1e-12));
    }

    #[test]
    fn isotropy_examples() {
        let c = Matrix::<Q>::from_i64_rows(&[&[1, 1]]);
        assert!(is_eta_isotropic(&c, 0.0).unwrap());
        let id = Matrix::<f64>::from_i64_rows(&[&[1, 0, 0, 0], &[0, 1, 0, 0]]);
        assert!(!is_eta_isotropic(&id, 1e-9).unwrap());
        let odd = Matrix::<f64>::from_i64_rows(&[&[1, 0, 0]]);
        assert_eq!(is_eta_isotropic(&odd, 1e-9), Err(MatError::OddColumns(3)));
    }

    #[test]
    fn total_positivity_examples() {
        // x_1(1) h_1(2) y_1(1)
        let x = Matrix::<Q>::from_i64_rows(&[&[1, 1], &[0, 1]]);
        let h = Matrix::<Q>::from_i64_rows(&[&[2, 0], &[0, 1]]);
        let y = Matrix::<Q>::from_i64_rows(&[&[1, 0], &[1, 1]]);
        let m = x.mul(&h).unwrap().mul(&y).unwrap();
        assert!(is_totally_positive(&m, 0.0).unwrap());
        assert!(!is_totally_positive(&Matrix::<Q>::identity(3), 0.0).unwrap());
    }

    #[test]
    fn span_equality_under_left_action() {
        let a = Matrix::<f64>::from_rows(vec![vec![1.0, 2.0, 0.5, 3.0], vec![0.0, 1.0, 4.0, 1.5]]).unwrap();
        let g = Matrix::<f64>::from_rows(vec![vec![2.0, -1.0], vec![0.5, 3.0]]).unwrap();
        assert!(row_span_equal(&a, &a, 1e-12).unwrap());
        assert!(row_span_equal(&a, &g.mul(&a).unwrap(), 1e-12).unwrap());
        let b = Matrix::<f64>::from_rows(vec![vec![1.0, 2.0, 0.5, 3.0], vec![0.0, 1.0, 4.0, 1.6]]).unwrap();
        assert!(!row_span_equal(&a, &b, 1e-7).unwrap());
        let aq = a.map(|x| parse_rational(&x.to_string()).unwrap());
        let gq = g.map(|x| parse_rational(&x.to_string()).unwrap());
        assert!(row_span_equal_exact(&aq, &gq.mul(&aq).unwrap()).unwrap());
    }

    #[test]
    fn rational_parsing_and_json() {
        assert_eq!(parse_rational("-1.25").unwrap(), Q::new(BigInt::from(-5), BigInt::from(4)));
        assert_eq!(parse_rational("5/3").unwrap(), Q::new(BigInt::from(5), BigInt::from(3)));
        let m = Matrix::<Q>::from_rows(vec![vec![parse_rational("5/3").unwrap(), q(-2)]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"[["5/3","-2"]]"#);
        let back: Matrix<Q> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let f: Matrix<f64> = serde_json::from_str("[[1.5,2],[3,4]]").unwrap();
        assert_eq!(f[(0, 0)], 1.5);
    }

    #[test]
    fn tolerance_parsing() {
        assert_eq!(Tolerances::parse("1e-6").unwrap(), Tolerances { zero: 1e-6, span: 1e-6 });
        let t = Tolerances::parse("zero=1e-10, span=1e-5").unwrap();
        assert_eq!(t, Tolerances { zero: 1e-10, span: 1e-5 });
        assert!(Tolerances::parse("width=3").is_err());
    }

    #[test]
    fn float_and_exact_det_agree() {
        let m = Matrix::<Q>::from_i64_rows(&[&[2, -1, 0, 3], &[1, 4, 2, 0], &[0, 5, -3, 1], &[7, 0, 1, 2]]);
        let exact = Scalar::to_f64(&m.det().unwrap());
        let float = m.to_f64().det().unwrap();
        assert!((exact - float).abs() < 1e-9);
    }

    fn small_matrix(r: usize, c: usize) -> impl Strategy<Value = Matrix<Q>> {
        proptest::collection::vec(-5i64..=5, r * c)
            .prop_map(move |v| Matrix::from_vec(r, c, v.into_iter().map(q).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn minor_alternates_in_rows(m in small_matrix(4, 4), a in 0usize..4, b in 0usize..4) {
            prop_assume!(a != b);
            let d = m.det().unwrap();
            let mut rows = m.rows_vec();
            rows.swap(a, b);
            let swapped = Matrix::from_rows(rows).unwrap();
            prop_assert_eq!(swapped.det().unwrap(), -d);
        }

        #[test]
        fn minor_is_linear_in_a_row(m in small_matrix(3, 3), v in proptest::collection::vec(-5i64..=5, 3), s in -4i64..=4) {
            let mut rows = m.rows_vec();
            let base = m.det().unwrap();
            let mut other = rows.clone();
            other[0] = v.iter().map(|&x| q(x)).collect();
            let od = Matrix::from_rows(other).unwrap().det().unwrap();
            for (j, x) in rows[0].iter_mut().enumerate() {
                *x = x.clone() + q(s) * q(v[j]);
            }
            let combined = Matrix::from_rows(rows).unwrap().det().unwrap();
            prop_assert_eq!(combined, base + q(s) * od);
        }

        #[test]
        fn cauchy_binet(a in small_matrix(2, 4), b in small_matrix(4, 3)) {
            let ab = a.mul(&b).unwrap();
            for r in (0..2).combinations(2) {
                for c in (0..3).combinations(2) {
                    let lhs = minor(&ab, &r, &c).unwrap();
                    let mut rhs = q(0);
                    for s in (0..4).combinations(2) {
                        rhs += minor(&a, &r, &s).unwrap() * minor(&b, &s, &c).unwrap();
                    }
                    prop_assert_eq!(lhs, rhs);
                }
            }
        }
    }
}
