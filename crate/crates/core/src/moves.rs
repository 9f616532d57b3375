//! The local moves Inc, Rot, Cyc and the compound Arc, acting on matrices `C`,
//! on `Λ`, on involutions and on index sets.
//!
//! Rot indices are 1-based: `Rot_i` acts on the pair `(i, i+1)`, and
//! `Rot_{2k}` is the wrap move on `(2k, 1)`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dd::Real;
use crate::exactmat::{MatError, Matrix, Scalar};
use crate::involution::{wrap, Involution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoveError {
    #[error("index {index} not valid for k = {k}")]
    BadIndex { index: usize, k: usize },
    #[error("expected a matrix with {expected} columns, got {got}")]
    Shape { expected: String, got: String },
    #[error("Arc_{0} is not supported (need 2 <= n <= 4 with n-2 angles)")]
    BadArc(usize),
    #[error("matrix is not in the image of Inc_{0}")]
    NotIncImage(usize),
    #[error("cannot parse move word: {0}")]
    Parse(String),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// The wrap sign `ε(i, k)`: `-(-1)^k` at `i = 2k`, otherwise `1`.
pub fn eps(i: usize, k: usize) -> i64 {
    if i == 2 * k {
        wrap_sign(k)
    } else {
        1
    }
}

/// `-(-1)^k`.
pub fn wrap_sign(k: usize) -> i64 {
    if k.is_multiple_of(2) {
        -1
    } else {
        1
    }
}

/// A hyperbolic angle stored as `(cosh α, sinh α)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Angle<T> {
    pub cosh: T,
    pub sinh: T,
}

impl<T: Scalar> Angle<T> {
    pub fn new(cosh: T, sinh: T) -> Self {
        Angle { cosh, sinh }
    }

    pub fn zero() -> Self {
        Angle { cosh: T::one(), sinh: T::zero() }
    }

    pub fn neg(&self) -> Self {
        Angle { cosh: self.cosh.clone(), sinh: -self.sinh.clone() }
    }

    pub fn scaled_sign(&self, s: i64) -> Self {
        if s < 0 {
            self.neg()
        } else {
            self.clone()
        }
    }
}

impl<T: Real> Angle<T> {
    /// `(√(1+u²), u)` computed in `T`.
    pub fn with_sinh(u: T) -> Self {
        Angle { cosh: (T::one() + u * u).sqrt(), sinh: u }
    }
}

impl Angle<f64> {
    /// Same sinh, cosh recomputed at the precision of `T`.
    pub fn lift<T: Real>(&self) -> Angle<T> {
        Angle::with_sinh(T::from_f64(self.sinh))
    }

    pub fn from_alpha(alpha: f64) -> Self {
        Angle { cosh: alpha.cosh(), sinh: alpha.sinh() }
    }

    /// `(√(1+u²), u)`.
    pub fn from_sinh(u: f64) -> Self {
        Angle { cosh: (1.0 + u * u).sqrt(), sinh: u }
    }

    pub fn alpha(&self) -> f64 {
        self.sinh.asinh()
    }
}

fn k_of<T: Scalar>(c: &Matrix<T>) -> Result<usize, MoveError> {
    let (r, n) = c.shape();
    if n != 2 * r {
        return Err(MoveError::Shape { expected: format!("{r}x{}", 2 * r), got: format!("{r}x{n}") });
    }
    Ok(r)
}

fn k_of_lambda<T: Scalar>(l: &Matrix<T>) -> Result<usize, MoveError> {
    let (n, c) = l.shape();
    if n % 2 == 1 || c != n / 2 + 2 {
        return Err(MoveError::Shape { expected: "2k x (k+2)".into(), got: format!("{n}x{c}") });
    }
    Ok(n / 2)
}

/// The column pair and sinh sign that `Rot_i` uses on size `2k`.
fn rot_pair(i: usize, k: usize) -> Result<(usize, usize, i64), MoveError> {
    if i == 0 || i > 2 * k {
        return Err(MoveError::BadIndex { index: i, k });
    }
    if i < 2 * k {
        Ok((i - 1, i, 1))
    } else {
        Ok((0, 2 * k - 1, wrap_sign(k)))
    }
}

/// `C ↦ C R_{i,i+1}(α)`; the wrap pair uses `R_{1,2k}(-(-1)^k α)`.
pub fn rot_matrix<T: Scalar>(c: &Matrix<T>, i: usize, a: &Angle<T>) -> Result<Matrix<T>, MoveError> {
    let k = k_of(c)?;
    let (p, q, sign) = rot_pair(i, k)?;
    let s = a.scaled_sign(sign).sinh;
    let mut out = c.clone();
    for r in 0..k {
        let x = c[(r, p)].clone();
        let y = c[(r, q)].clone();
        out[(r, p)] = a.cosh.clone() * x.clone() + s.clone() * y.clone();
        out[(r, q)] = s.clone() * x + a.cosh.clone() * y;
    }
    Ok(out)
}

/// Projective limit of `rot_matrix(c, i, α)` as `α → ∞`, as a row-span representative.
///
/// With `u = c_p + σ c_q` the growing combination, one row becomes `e_p + σ e_q`
/// and the rest lose their `p, q` entries. `None` if the limit drops rank.
pub fn rot_matrix_at_infinity<T: Real>(c: &Matrix<T>, i: usize) -> Result<Option<Matrix<T>>, MoveError> {
    let k = k_of(c)?;
    let (p, q, sign) = rot_pair(i, k)?;
    let sg = T::from_i64(sign);
    let u: Vec<T> = (0..k).map(|r| c[(r, p)] + sg * c[(r, q)]).collect();
    let scale = c.max_abs().max(1.0);
    let Some(piv) = (0..k).max_by(|a, b| u[*a].to_f64().abs().total_cmp(&u[*b].to_f64().abs())) else {
        return Ok(None);
    };
    let mut out = c.clone();
    if u[piv].to_f64().abs() <= 1e-12 * scale {
        for r in 0..k {
            out[(r, p)] = T::zero();
            out[(r, q)] = T::zero();
        }
    } else {
        for r in 0..k {
            if r != piv {
                let f = u[r] / u[piv];
                for col in 0..c.ncols() {
                    out[(r, col)] = c[(r, col)] - f * c[(piv, col)];
                }
                out[(r, p)] = T::zero();
                out[(r, q)] = T::zero();
            }
        }
        for col in 0..c.ncols() {
            out[(piv, col)] = T::zero();
        }
        out[(piv, p)] = T::one();
        out[(piv, q)] = sg;
    }
    Ok((crate::exactmat::rank(&out.to_f64(), 1e-10) == k).then_some(out))
}

pub fn rot_inv_matrix<T: Scalar>(c: &Matrix<T>, i: usize, a: &Angle<T>) -> Result<Matrix<T>, MoveError> {
    rot_matrix(c, i, &a.neg())
}

/// `Λ ↦ R^{-1} Λ`, keeping `CΛ` fixed.
pub fn rot_lambda<T: Scalar>(l: &Matrix<T>, i: usize, a: &Angle<T>) -> Result<Matrix<T>, MoveError> {
    let k = k_of_lambda(l)?;
    let (p, q, sign) = rot_pair(i, k)?;
    let s = -a.scaled_sign(sign).sinh;
    let mut out = l.clone();
    for col in 0..l.ncols() {
        let x = l[(p, col)].clone();
        let y = l[(q, col)].clone();
        out[(p, col)] = a.cosh.clone() * x.clone() + s.clone() * y.clone();
        out[(q, col)] = s.clone() * x + a.cosh.clone() * y;
    }
    Ok(out)
}

/// `Rot^{-1}` on `Λ`, i.e. right-multiplication by `R`.
pub fn rot_inv_lambda<T: Scalar>(l: &Matrix<T>, i: usize, a: &Angle<T>) -> Result<Matrix<T>, MoveError> {
    rot_lambda(l, i, &a.neg())
}

/// New column 1 is `-(-1)^k` times old column `2k`; the rest shift right.
pub fn cyc_matrix<T: Scalar>(c: &Matrix<T>) -> Result<Matrix<T>, MoveError> {
    let k = k_of(c)?;
    let n = 2 * k;
    let sg = T::from_i64(wrap_sign(k));
    Ok(Matrix::from_fn(k, n, |r, j| if j == 0 { sg.clone() * c[(r, n - 1)].clone() } else { c[(r, j - 1)].clone() }))
}

pub fn cyc_inv_matrix<T: Scalar>(c: &Matrix<T>) -> Result<Matrix<T>, MoveError> {
    let k = k_of(c)?;
    let n = 2 * k;
    let sg = T::from_i64(wrap_sign(k));
    Ok(Matrix::from_fn(k, n, |r, j| if j == n - 1 { sg.clone() * c[(r, 0)].clone() } else { c[(r, j + 1)].clone() }))
}

/// Cyc on the rows of `Λ`.
pub fn cyc_lambda<T: Scalar>(l: &Matrix<T>) -> Result<Matrix<T>, MoveError> {
    let k = k_of_lambda(l)?;
    let n = 2 * k;
    let sg = T::from_i64(wrap_sign(k));
    Ok(Matrix::from_fn(n, l.ncols(), |r, j| if r == 0 { sg.clone() * l[(n - 1, j)].clone() } else { l[(r - 1, j)].clone() }))
}

pub fn cyc_inv_lambda<T: Scalar>(l: &Matrix<T>) -> Result<Matrix<T>, MoveError> {
    let k = k_of_lambda(l)?;
    let n = 2 * k;
    let sg = T::from_i64(wrap_sign(k));
    Ok(Matrix::from_fn(n, l.ncols(), |r, j| if r == n - 1 { sg.clone() * l[(0, j)].clone() } else { l[(r + 1, j)].clone() }))
}

/// Inserts zero columns at new positions `i, i+1`, negates the old columns
/// from `i` on, and appends the row `e_i + e_{i+1}`.
pub fn inc_matrix<T: Scalar>(c: &Matrix<T>, i: usize) -> Result<Matrix<T>, MoveError> {
    let k = if c.nrows() == 0 && c.ncols() == 0 { 0 } else { k_of(c)? };
    if i == 0 || i > 2 * k + 1 {
        return Err(MoveError::BadIndex { index: i, k });
    }
    let n = 2 * k + 2;
    let mut out = Matrix::zeros(k + 1, n);
    for r in 0..k {
        for j in 0..2 * k {
            let (dst, v) = if j + 1 < i { (j, c[(r, j)].clone()) } else { (j + 2, -c[(r, j)].clone()) };
            out[(r, dst)] = v;
        }
    }
    out[(k, i - 1)] = T::one();
    out[(k, i)] = T::one();
    Ok(out)
}

/// Left inverse of [`inc_matrix`] on its image (up to left `GL`).
pub fn inc_inv_matrix<T: Scalar>(c: &Matrix<T>, i: usize) -> Result<Matrix<T>, MoveError> {
    let kk = k_of(c)?;
    if kk == 0 || i == 0 || i >= 2 * kk {
        return Err(MoveError::BadIndex { index: i, k: kk });
    }
    let (p, q) = (i - 1, i);
    let piv = (0..kk)
        .max_by(|&a, &b| c[(a, p)].to_f64().abs().total_cmp(&c[(b, p)].to_f64().abs()))
        .expect("nonempty");
    if c[(piv, p)].is_zero_tol(0.0) {
        return Err(MoveError::NotIncImage(i));
    }
    let scale = c.max_abs().max(f64::MIN_POSITIVE);
    let mut rows = Vec::new();
    for r in (0..kk).filter(|&r| r != piv) {
        let f = c[(r, p)].clone() / c[(piv, p)].clone();
        let row: Vec<T> = (0..2 * kk).map(|j| c[(r, j)].clone() - f.clone() * c[(piv, j)].clone()).collect();
        if !row[q].is_zero_tol(1e-8 * scale) {
            return Err(MoveError::NotIncImage(i));
        }
        rows.push(row);
    }
    let out: Vec<Vec<T>> = rows
        .into_iter()
        .map(|row| {
            (0..2 * kk)
                .filter(|&j| j != p && j != q)
                .map(|j| if j < p { row[j].clone() } else { -row[j].clone() })
                .collect()
        })
        .collect();
    if out.is_empty() {
        return Ok(Matrix::zeros(0, 0));
    }
    Ok(Matrix::from_rows(out)?)
}

/// `Inc_i^{-1}` on a `(2k+2) x (k+3)` matrix, giving a `2k x (k+2)` one.
///
/// Rows `i, i+1` are first normalised to the last two basis vectors by a
/// right `GL` action; the rows above `i+1` are negated (matching the column
/// signs of [`inc_matrix`]) and the result is rescaled so that
/// `det Λ'_J = det Λ_{J∪{i}} + det Λ_{J∪{i+1}}` holds exactly.
pub fn inc_inv_lambda<T: Scalar>(l: &Matrix<T>, i: usize) -> Result<Matrix<T>, MoveError> {
    let big_k = k_of_lambda(l)?;
    if big_k == 0 || i == 0 || i >= 2 * big_k {
        return Err(MoveError::BadIndex { index: i, k: big_k });
    }
    let m = l.ncols();
    let (ri, rj) = (i - 1, i);
    // complementary pivot columns: the 2x2 minor of rows i, i+1 of largest size
    let mut best = (0, 1, -1.0);
    for a in 0..m {
        for b in a + 1..m {
            let d = (l[(ri, a)].clone() * l[(rj, b)].clone() - l[(ri, b)].clone() * l[(rj, a)].clone()).to_f64().abs();
            if d > best.2 {
                best = (a, b, d);
            }
        }
    }
    if best.2 <= 0.0 {
        return Err(MoveError::Mat(MatError::RankDeficient));
    }
    let free: Vec<usize> = (0..m).filter(|&c| c != best.0 && c != best.1).collect();
    let mut h = Matrix::zeros(m, m);
    for (r, &c) in free.iter().enumerate() {
        h[(r, c)] = T::one();
    }
    for c in 0..m {
        h[(m - 2, c)] = l[(ri, c)].clone();
        h[(m - 1, c)] = l[(rj, c)].clone();
    }
    let det_h = h.det()?;
    let normal = l.mul(&h.inverse()?)?;
    let n_out = 2 * big_k - 2;
    let mut out = Matrix::zeros(n_out, m - 1);
    let mut dst = 0;
    for r in 0..2 * big_k {
        if r == ri || r == rj {
            continue;
        }
        let sg = if r > rj { -T::one() } else { T::one() };
        for c in 0..m - 2 {
            out[(dst, c)] = sg.clone() * normal[(r, c)].clone();
        }
        out[(dst, m - 2)] = sg * (normal[(r, m - 2)].clone() - normal[(r, m - 1)].clone());
        dst += 1;
    }
    for r in 0..n_out {
        out[(r, 0)] = out[(r, 0)].clone() * det_h.clone();
    }
    Ok(out)
}

/// 1-based Rot indices `i_2, ..., i_{n-1}` used by `Arc_{n,ℓ}` on size `2k+2`.
pub fn arc_rot_indices(n: usize, l: usize, k_after: usize) -> Vec<usize> {
    (1..n - 1).map(|j| wrap((l + j) as i64, 2 * k_after)).collect()
}

fn check_arc(n: usize, angles: usize) -> Result<(), MoveError> {
    if !(2..=4).contains(&n) || angles != n - 2 {
        return Err(MoveError::BadArc(n));
    }
    Ok(())
}

/// `Arc_{n,ℓ}(θ)(C) = Rot_{i_{n-1},i_n}(θ_{n-2}) ⋯ Rot_{i_2,i_3}(θ_1) Inc_ℓ(C)`.
pub fn arc_matrix<T: Scalar>(c: &Matrix<T>, n: usize, l: usize, angles: &[Angle<T>]) -> Result<Matrix<T>, MoveError> {
    check_arc(n, angles.len())?;
    let mut out = inc_matrix(c, l)?;
    let k_after = out.nrows();
    for (idx, a) in arc_rot_indices(n, l, k_after).into_iter().zip(angles) {
        out = rot_matrix(&out, idx, a)?;
    }
    Ok(out)
}

pub fn rot_involution(t: &Involution, i: usize) -> Result<Involution, MoveError> {
    let k = t.k();
    let (p, q, _) = rot_pair(i, k)?;
    Ok(t.conjugate_transposition(p + 1, q + 1))
}

pub fn cyc_involution(t: &Involution) -> Involution {
    t.cyclic_shift()
}

pub fn cyc_inv_involution(t: &Involution) -> Involution {
    let mut s = t.clone();
    for _ in 1..t.n().max(1) {
        s = s.cyclic_shift();
    }
    s
}

/// Old labels `ℓ >= i` move up by two; `{i, i+1}` becomes a new arc.
pub fn inc_involution(t: &Involution, i: usize) -> Result<Involution, MoveError> {
    let k = t.k();
    if i == 0 || i > (2 * k).max(1) {
        return Err(MoveError::BadIndex { index: i, k });
    }
    let shift = |x: usize| if x < i { x } else { x + 2 };
    let mut map = vec![0; 2 * k + 2];
    for x in 1..=2 * k {
        map[shift(x) - 1] = shift(t.apply(x));
    }
    map[i - 1] = i + 1;
    map[i] = i;
    Ok(Involution::from_map(map).expect("inc preserves involutions"))
}

pub fn inc_inv_involution(t: &Involution, i: usize) -> Result<Involution, MoveError> {
    let k = t.k();
    if k == 0 || i == 0 || i >= 2 * k || t.apply(i) != i + 1 {
        return Err(MoveError::BadIndex { index: i, k });
    }
    let down = |x: usize| if x < i { x } else { x - 2 };
    let mut map = vec![0; 2 * k - 2];
    for x in (1..=2 * k).filter(|&x| x != i && x != i + 1) {
        map[down(x) - 1] = down(t.apply(x));
    }
    Ok(Involution::from_map(map).expect("inc inverse preserves involutions"))
}

pub fn arc_involution(t: &Involution, n: usize, l: usize) -> Result<Involution, MoveError> {
    if !(2..=4).contains(&n) {
        return Err(MoveError::BadArc(n));
    }
    let mut out = inc_involution(t, l)?;
    let k_after = out.k();
    for idx in arc_rot_indices(n, l, k_after) {
        out = rot_involution(&out, idx)?;
    }
    Ok(out)
}

/// `Rot_i(I) = I ∪ {i, i+1}` when `I` meets the pair, else `I`.
pub fn rot_index_set(set: &[usize], i: usize, k: usize) -> Result<Vec<usize>, MoveError> {
    let (p, q, _) = rot_pair(i, k)?;
    let mut out = set.to_vec();
    if set.contains(&(p + 1)) || set.contains(&(q + 1)) {
        out.push(p + 1);
        out.push(q + 1);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn cyc_index_set(set: &[usize], k: usize) -> Vec<usize> {
    let mut out: Vec<usize> = set.iter().map(|&x| wrap(x as i64 + 1, 2 * k)).collect();
    out.sort_unstable();
    out
}

pub fn inc_index_set(set: &[usize], i: usize) -> Vec<usize> {
    set.iter().map(|&x| if x < i { x } else { x + 2 }).collect()
}

/// A single move with concrete angles (if any).
#[derive(Debug, Clone, PartialEq)]
pub enum Move {
    Inc(usize),
    IncInv(usize),
    Rot(usize, Angle<f64>),
    RotInv(usize, Angle<f64>),
    Cyc,
    CycInv,
    /// An empty angle list leaves the angles unspecified (involution-level use).
    Arc { n: usize, l: usize, angles: Vec<Angle<f64>> },
}

impl Move {
    pub fn k_after(&self, k: usize) -> usize {
        match self {
            Move::Inc(_) | Move::Arc { .. } => k + 1,
            Move::IncInv(_) => k - 1,
            _ => k,
        }
    }

    pub fn apply_matrix(&self, c: &Matrix<f64>) -> Result<Matrix<f64>, MoveError> {
        match self {
            Move::Inc(i) => inc_matrix(c, *i),
            Move::IncInv(i) => inc_inv_matrix(c, *i),
            Move::Rot(i, a) => rot_matrix(c, *i, a),
            Move::RotInv(i, a) => rot_inv_matrix(c, *i, a),
            Move::Cyc => cyc_matrix(c),
            Move::CycInv => cyc_inv_matrix(c),
            Move::Arc { n, l, angles } => arc_matrix(c, *n, *l, angles),
        }
    }

    pub fn apply_involution(&self, t: &Involution) -> Result<Involution, MoveError> {
        match self {
            Move::Inc(i) => inc_involution(t, *i),
            Move::IncInv(i) => inc_inv_involution(t, *i),
            Move::Rot(i, _) | Move::RotInv(i, _) => rot_involution(t, *i),
            Move::Cyc => Ok(cyc_involution(t)),
            Move::CycInv => Ok(cyc_inv_involution(t)),
            Move::Arc { n, l, .. } => arc_involution(t, *n, *l),
        }
    }

    /// Action on a set of labels, with `k` the size before the move.
    pub fn apply_index_set(&self, set: &[usize], k: usize) -> Result<Vec<usize>, MoveError> {
        match self {
            Move::Inc(i) => Ok(inc_index_set(set, *i)),
            Move::Rot(i, _) | Move::RotInv(i, _) => rot_index_set(set, *i, k),
            Move::Cyc => Ok(cyc_index_set(set, k)),
            Move::CycInv => Ok(set.iter().map(|&x| wrap(x as i64 - 1, 2 * k)).collect()),
            Move::IncInv(i) => Ok(set.iter().filter(|&&x| x != *i && x != i + 1).map(|&x| if x < *i { x } else { x - 2 }).collect()),
            Move::Arc { n, l, .. } => {
                let mut s = inc_index_set(set, *l);
                for idx in arc_rot_indices(*n, *l, k + 1) {
                    s = rot_index_set(&s, idx, k + 1)?;
                }
                Ok(s)
            }
        }
    }
}

fn fmt_angle(a: &Angle<f64>) -> String {
    format!("{}", a.alpha())
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Inc(i) => write!(f, "I{i}"),
            Move::IncInv(i) => write!(f, "i{i}"),
            Move::Rot(i, a) => write!(f, "R{i}({})", fmt_angle(a)),
            Move::RotInv(i, a) => write!(f, "r{i}({})", fmt_angle(a)),
            Move::Cyc => write!(f, "C"),
            Move::CycInv => write!(f, "c"),
            Move::Arc { n, l, angles } => {
                write!(f, "A{n},{l}")?;
                if !angles.is_empty() {
                    let parts: Vec<String> = angles.iter().map(fmt_angle).collect();
                    write!(f, "({})", parts.join(","))?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Move {
    type Err = MoveError;
    fn from_str(tok: &str) -> Result<Self, Self::Err> {
        let bad = || MoveError::Parse(tok.to_string());
        let (head, args) = match tok.split_once('(') {
            Some((h, rest)) => (h, Some(rest.strip_suffix(')').ok_or_else(bad)?)),
            None => (tok, None),
        };
        let angles: Vec<Angle<f64>> = match args {
            Some(a) => a
                .split(',')
                .map(|x| x.trim().parse::<f64>().map(Angle::from_alpha).map_err(|_| bad()))
                .collect::<Result<_, _>>()?,
            None => Vec::new(),
        };
        let mut chars = head.chars();
        let kind = chars.next().ok_or_else(bad)?;
        let rest: String = chars.collect();
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
        let one_angle = |v: &[Angle<f64>]| if v.len() == 1 { Ok(v[0].clone()) } else { Err(bad()) };
        match kind {
            'I' => Ok(Move::Inc(num(&rest)?)),
            'i' => Ok(Move::IncInv(num(&rest)?)),
            'R' => Ok(Move::Rot(num(&rest)?, one_angle(&angles)?)),
            'r' => Ok(Move::RotInv(num(&rest)?, one_angle(&angles)?)),
            'C' if rest.is_empty() => Ok(Move::Cyc),
            'c' if rest.is_empty() => Ok(Move::CycInv),
            'A' => {
                let (n, l) = rest.split_once(',').ok_or_else(bad)?;
                let (n, l) = (num(n)?, num(l)?);
                if !(2..=4).contains(&n) || (!angles.is_empty() && angles.len() != n - 2) {
                    return Err(MoveError::BadArc(n));
                }
                Ok(Move::Arc { n, l, angles })
            }
            _ => Err(bad()),
        }
    }
}

/// A whitespace-separated word of moves, applied left to right.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MoveWord {
    pub moves: Vec<Move>,
}

impl MoveWord {
    pub fn apply_matrix(&self, c: &Matrix<f64>) -> Result<Matrix<f64>, MoveError> {
        self.moves.iter().try_fold(c.clone(), |acc, m| m.apply_matrix(&acc))
    }

    pub fn apply_involution(&self, t: &Involution) -> Result<Involution, MoveError> {
        self.moves.iter().try_fold(t.clone(), |acc, m| m.apply_involution(&acc))
    }
}

impl fmt::Display for MoveWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.moves.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl FromStr for MoveWord {
    type Err = MoveError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(MoveWord { moves: s.split_whitespace().map(str::parse).collect::<Result<_, _>>()? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmat::{
        is_eta_isotropic, min_relative_maximal_minor, plucker, plucker_vector, Matrix,
    };
    use itertools::Itertools;
    use proptest::prelude::*;

    fn m(rows: &[&[i64]]) -> Matrix<f64> {
        Matrix::from_i64_rows(rows)
    }

    #[test]
    fn inc_base_and_example() {
        let base = inc_matrix(&Matrix::<f64>::zeros(0, 0), 1).unwrap();
        assert_eq!(base, m(&[&[1, 1]]));
        let c = inc_matrix(&base, 2).unwrap();
        assert_eq!(c, m(&[&[1, 0, 0, -1], &[0, 1, 1, 0]]));
        assert!(is_eta_isotropic(&c, 1e-12).unwrap());
        for s in (1..=4).combinations(2) {
            let comp: Vec<usize> = (1..=4).filter(|x| !s.contains(x)).collect();
            let a = plucker(&c, &s).unwrap();
            let b = plucker(&c, &comp).unwrap();
            assert!((a - b).abs() < 1e-12, "{s:?}");
        }
    }

    #[test]
    fn rot_zero_is_identity() {
        let c = m(&[&[1, 0, 0, -1], &[0, 1, 1, 0]]);
        for i in 1..=4 {
            assert_eq!(rot_matrix(&c, i, &Angle::zero()).unwrap(), c);
        }
    }

    #[test]
    fn rot_only_touches_straddling_pluckers() {
        let c = Matrix::from_rows(vec![vec![0.3, 1.1, -0.4, 2.0], vec![1.5, -0.2, 0.7, 0.9]]).unwrap();
        let r = rot_matrix(&c, 2, &Angle::from_alpha(0.7)).unwrap();
        for s in (1..=4).combinations(2) {
            let hit = s.iter().filter(|&&x| x == 2 || x == 3).count();
            if hit != 1 {
                assert!((plucker(&c, &s).unwrap() - plucker(&r, &s).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn arc_chain_reaches_k3_top_cell() {
        let a = |x: f64| Angle::from_sinh(x);
        let c = arc_matrix(&Matrix::zeros(0, 0), 2, 1, &[]).unwrap();
        let c = arc_matrix(&c, 3, 2, &[a(0.8)]).unwrap();
        let c = arc_matrix(&c, 4, 2, &[a(1.3), a(0.6)]).unwrap();
        let p = plucker_vector(&c).unwrap();
        assert!(p.values().all(|&v| v > 1e-9), "{c:?}");
        let t = arc_involution(&arc_involution(&"(12)".parse().unwrap(), 3, 2).unwrap(), 4, 2).unwrap();
        assert_eq!(t, Involution::top_cell(3));
    }

    #[test]
    fn arc_row_shape() {
        let c = arc_matrix(&m(&[&[1, 0, 0, -1], &[0, 1, 1, 0]]), 4, 2, &[Angle::from_alpha(0.4), Angle::from_alpha(0.9)])
            .unwrap();
        let (c1, s1) = (0.4f64.cosh(), 0.4f64.sinh());
        let (c2, s2) = (0.9f64.cosh(), 0.9f64.sinh());
        let want = [0.0, 1.0, c1, s1 * c2, s1 * s2, 0.0];
        for (j, w) in want.iter().enumerate() {
            assert!((c[(2, j)] - w).abs() < 1e-12);
        }
    }

    #[test]
    fn index_set_and_involution_examples() {
        assert_eq!(rot_index_set(&[2, 5], 2, 3).unwrap(), vec![2, 3, 5]);
        let top = Involution::top_cell(3);
        assert_eq!(cyc_involution(&top), top);
        assert_eq!(inc_involution(&"(12)".parse().unwrap(), 2).unwrap(), "(14)(23)".parse().unwrap());
        let t: Involution = "(14)(26)(35)".parse().unwrap();
        assert_eq!(cyc_inv_involution(&cyc_involution(&t)), t);
    }

    #[test]
    fn move_word_roundtrip() {
        let w: MoveWord = "A2,1 A3,2 A4,2 I3 R5(1.25) C c i2".parse().unwrap();
        assert_eq!(w.moves.len(), 8);
        let again: MoveWord = w.to_string().parse().unwrap();
        assert_eq!(again.to_string(), w.to_string());
        assert!("A5,1".parse::<Move>().is_err());
        assert!("R3".parse::<Move>().is_err());
    }

    #[test]
    fn vandermonde_cyc_stays_positive() {
        let lam = Matrix::<f64>::from_fn(8, 6, |i, j| ((i + 1) as f64).powi(j as i32));
        assert!(min_relative_maximal_minor(&cyc_lambda(&lam).unwrap()) > 0.0);
        assert_eq!(rot_lambda(&lam, 3, &Angle::zero()).unwrap(), lam);
    }

    #[test]
    fn inc_inv_lambda_plucker_identity() {
        let lam = Matrix::<f64>::from_fn(8, 6, |i, j| (1.0 + 0.3 * i as f64).powi(j as i32));
        for i in 1..8 {
            let small = inc_inv_lambda(&lam, i).unwrap();
            assert_eq!(small.shape(), (6, 5));
            let keep: Vec<usize> = (1..=8).filter(|&x| x != i && x != i + 1).collect();
            for j in keep.iter().copied().combinations(5) {
                let rows: Vec<usize> = j.iter().map(|&x| keep.iter().position(|&y| y == x).unwrap()).collect();
                let lhs = small.select_rows(&rows).unwrap().det().unwrap();
                let mut with_i = j.clone();
                with_i.push(i);
                with_i.sort();
                let mut with_j = j.clone();
                with_j.push(i + 1);
                with_j.sort();
                let idx = |v: &[usize]| v.iter().map(|x| x - 1).collect::<Vec<_>>();
                let rhs = lam.select_rows(&idx(&with_i)).unwrap().det().unwrap()
                    + lam.select_rows(&idx(&with_j)).unwrap().det().unwrap();
                assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1.0), "i={i} J={j:?}: {lhs} vs {rhs}");
            }
            assert!(min_relative_maximal_minor(&small) > 0.0);
        }
    }

    fn any_angle() -> impl Strategy<Value = Angle<f64>> {
        (0.2f64..5.0).prop_map(Angle::from_sinh)
    }

    fn k3_point() -> impl Strategy<Value = Matrix<f64>> {
        (any_angle(), any_angle(), any_angle()).prop_map(|(a, b, c)| {
            let x = arc_matrix(&Matrix::zeros(0, 0), 2, 1, &[]).unwrap();
            let x = arc_matrix(&x, 3, 2, &[a]).unwrap();
            arc_matrix(&x, 4, 2, &[b, c]).unwrap()
        })
    }

    proptest! {
        #[test]
        fn cyc_shifts_pluckers(c in k3_point()) {
            let d = cyc_matrix(&c).unwrap();
            for s in (1..=6).combinations(3) {
                let t = cyc_index_set(&s, 3);
                let a = plucker(&c, &s).unwrap();
                let b = plucker(&d, &t).unwrap();
                prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
            }
            prop_assert_eq!(cyc_inv_matrix(&d).unwrap(), c.clone());
        }

        #[test]
        fn moves_preserve_isotropy_and_nonnegativity(c in k3_point(), i in 1usize..=6, a in any_angle()) {
            let r = rot_matrix(&c, i, &a).unwrap();
            prop_assert!(is_eta_isotropic(&r, 1e-9).unwrap());
            let p = plucker_vector(&r).unwrap();
            let top = p.values().fold(0.0f64, |x, y| x.max(y.abs()));
            prop_assert!(p.values().all(|&v| v >= -1e-9 * top));
            let inc = inc_matrix(&c, i).unwrap();
            prop_assert!(is_eta_isotropic(&inc, 1e-9).unwrap());
            let back = inc_inv_matrix(&inc, i).unwrap();
            prop_assert!(crate::exactmat::row_span_equal(&back, &c, 1e-9).unwrap());
        }

        #[test]
        fn rot_then_inverse(c in k3_point(), i in 1usize..=6, a in any_angle()) {
            let r = rot_inv_matrix(&rot_matrix(&c, i, &a).unwrap(), i, &a).unwrap();
            for (x, y) in r.rows_vec().concat().iter().zip(c.rows_vec().concat()) {
                prop_assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()));
            }
        }

        #[test]
        fn cy_lambda_keeps_y(c in k3_point(), i in 1usize..=6, a in any_angle()) {
            let lam = Matrix::<f64>::from_fn(6, 5, |r, j| ((r + 1) as f64).powi(j as i32));
            let y = c.mul(&lam).unwrap();
            let y1 = rot_matrix(&c, i, &a).unwrap().mul(&rot_lambda(&lam, i, &a).unwrap()).unwrap();
            let y2 = cyc_matrix(&c).unwrap().mul(&cyc_lambda(&lam).unwrap()).unwrap();
            for (yy, z) in [(y1, &y), (y2, &y)] {
                prop_assert!(yy.rows_vec().concat().iter().zip(z.rows_vec().concat()).all(|(p, q)| (p - q).abs() < 1e-7 * (1.0 + q.abs())));
            }
        }
    }
}
