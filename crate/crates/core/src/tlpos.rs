//! Temperley–Lieb positivity: partial non-crossing pairings, markings, the
//! coefficients `c^{i,j}_{τ,T}`, the base matrix `Λ_{0,k}`, the `r_i(t)`
//! semigroup, strongly positive `Λ̃`, and the immanant decomposition of
//! Mandelstam variables.
//!
//! Label sets are bitmasks: label `l ∈ [n]` is bit `l - 1`.

use std::collections::HashMap;
use std::fmt;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ampl::{Grade, LambdaMatrix, AmplError};
use num::BigRational;

use crate::exactmat::{eta, is_positive_matrix, is_totally_positive, minor, MatError, Matrix, Scalar};
use crate::involution::cyclic_interval;

#[derive(Debug, Error)]
pub enum TlError {
    #[error("k = {k} is outside the supported range {range}")]
    Range { k: usize, range: &'static str },
    #[error("(i, j) = ({i}, {j}) needs 2 <= j - i <= n - 2 cyclically")]
    BadInterval { i: usize, j: usize },
    #[error("expected {expected} generator parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("generator parameter {0} is not positive")]
    NonPositive(usize),
    #[error("post-check failed: {0}")]
    PostCheck(String),
    #[error("least-squares residual {0:e} above tolerance")]
    Residual(f64),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Ampl(#[from] AmplError),
}

fn bit(l: usize) -> u32 {
    1 << (l - 1)
}

fn labels(mask: u32) -> Vec<usize> {
    (1..=32).filter(|&l| mask & bit(l) != 0).collect()
}

/// A `(k,n)`-partial non-crossing pairing `(τ, T)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartialPairing {
    pub n: usize,
    pub k: usize,
    /// `tau[l - 1] = τ(l)`
    pub tau: Vec<usize>,
    /// fixed points in `T`, ascending
    pub t: Vec<usize>,
}

impl PartialPairing {
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        (1..=self.n).filter(|&l| self.tau[l - 1] > l).map(|l| (l, self.tau[l - 1])).collect()
    }

    /// `S(τ)` as a mask.
    pub fn support_mask(&self) -> u32 {
        self.arcs().iter().fold(0, |m, &(a, b)| m | bit(a) | bit(b))
    }

    pub fn t_mask(&self) -> u32 {
        self.t.iter().fold(0, |m, &l| m | bit(l))
    }

    /// Arcs with exactly one endpoint in `I(i,j)`, ordered by that endpoint
    /// along `i+1, ..., j`.
    pub fn special_arcs(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        let interval = cyclic_interval(i % self.n + 1, j, self.n);
        let inside = interval.iter().fold(0u32, |m, &l| m | bit(l));
        let mut out = Vec::new();
        for &l in &interval {
            let o = self.tau[l - 1];
            if o != l && inside & bit(o) == 0 {
                out.push((l, o));
            }
        }
        out
    }

    /// Whether `(τ, T)` is compatible with the pair `(A, B)` of `k`-sets.
    pub fn compatible(&self, a: u32, b: u32) -> bool {
        if self.t_mask() != a & b || self.support_mask() != a ^ b {
            return false;
        }
        labels(a & !b).iter().all(|&l| b & !a & bit(self.tau[l - 1]) != 0)
    }
}

impl fmt::Display for PartialPairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, b) in self.arcs() {
            write!(f, "({a} {b})")?;
        }
        write!(f, "T{{{}}}", self.t.iter().join(","))
    }
}

fn non_crossing(tau: &[usize]) -> bool {
    let n = tau.len();
    for a in 1..=n {
        let c = tau[a - 1];
        if c <= a {
            continue;
        }
        for b in a + 1..c {
            let d = tau[b - 1];
            if d > c {
                return false;
            }
        }
    }
    true
}

fn involutions(n: usize) -> Vec<Vec<usize>> {
    fn go(tau: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let Some(p) = tau.iter().position(|&x| x == 0) else {
            out.push(tau.clone());
            return;
        };
        tau[p] = p + 1;
        go(tau, out);
        for q in p + 1..tau.len() {
            if tau[q] == 0 {
                tau[p] = q + 1;
                tau[q] = p + 1;
                go(tau, out);
                tau[q] = 0;
            }
        }
        tau[p] = 0;
    }
    let mut out = Vec::new();
    go(&mut vec![0; n], &mut out);
    out
}

/// All of `𝒯_{k,n}`, sorted.
pub fn enumerate_pairings(k: usize, n: usize) -> Vec<PartialPairing> {
    let mut out = Vec::new();
    for tau in involutions(n).into_iter().filter(|t| non_crossing(t)) {
        let fixed: Vec<usize> = (1..=n).filter(|&l| tau[l - 1] == l).collect();
        let s = n - fixed.len();
        if s > 2 * k || (2 * k - s) % 2 == 1 {
            continue;
        }
        for t in fixed.iter().copied().combinations((2 * k - s) / 2) {
            out.push(PartialPairing { n, k, tau: tau.clone(), t });
        }
    }
    out.sort();
    out
}

/// Maximal minors of a `r x n` matrix keyed by column mask.
pub struct MinorTable<T> {
    values: HashMap<u32, T>,
}

impl<T: Scalar> MinorTable<T> {
    pub fn new(m: &Matrix<T>) -> Result<Self, MatError> {
        let (r, n) = m.shape();
        let rows: Vec<usize> = (0..r).collect();
        let mut values = HashMap::new();
        for cols in (0..n).combinations(r) {
            let mask = cols.iter().fold(0u32, |acc, &c| acc | (1 << c));
            values.insert(mask, minor(m, &rows, &cols)?);
        }
        Ok(MinorTable { values })
    }

    pub fn get(&self, mask: u32) -> T {
        self.values.get(&mask).cloned().unwrap_or_else(T::zero)
    }
}

/// `c^{i,j}_{τ,T}` together with the sum of the absolute values of its terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CCoeff<T> {
    pub value: T,
    pub scale: f64,
    /// fewer than two special arcs; `value` is then 0
    pub trivial: bool,
}

fn check_interval(i: usize, j: usize, n: usize) -> Result<(), TlError> {
    let len = (j + n - i) % n;
    if i == 0 || i > n || j == 0 || j > n || len < 2 || len > n - 2 {
        return Err(TlError::BadInterval { i, j });
    }
    Ok(())
}

/// Sum over markings of `(-1)^d Δ_{L_μ}(first) Δ_{R_μ ∪ J_μ}(second)`, with
/// `first(mask)` receiving `L_μ`.
fn marking_sum<T: Scalar>(
    i: usize,
    j: usize,
    p: &PartialPairing,
    first: impl Fn(u32) -> T,
    second: &MinorTable<T>,
) -> Result<CCoeff<T>, TlError> {
    check_interval(i, j, p.n)?;
    let special = p.special_arcs(i, j);
    if special.len() < 2 {
        return Ok(CCoeff { value: T::zero(), scale: 0.0, trivial: true });
    }
    let t = p.t_mask();
    let arcs = p.arcs();
    let mut value = T::zero();
    let mut scale = 0.0;
    for a in 0..special.len() {
        for b in a + 1..special.len() {
            let j_arcs = [special[a], special[b]];
            let j_mask = j_arcs.iter().fold(0u32, |m, &(x, y)| m | bit(x) | bit(y));
            let others: Vec<(usize, usize)> =
                arcs.iter().copied().filter(|&(x, _)| j_mask & bit(x) == 0).collect();
            let sign = if (b - a - 1) % 2 == 0 { T::one() } else { -T::one() };
            for choice in 0u32..(1 << others.len()) {
                let mut l_mask = t;
                let mut r_mask = t | j_mask;
                for (e, &(x, y)) in others.iter().enumerate() {
                    let (lpt, rpt) = if choice & (1 << e) == 0 { (x, y) } else { (y, x) };
                    l_mask |= bit(lpt);
                    r_mask |= bit(rpt);
                }
                let term = first(l_mask) * second.get(r_mask);
                scale += term.to_f64().abs();
                value = value + sign.clone() * term;
            }
        }
    }
    Ok(CCoeff { value, scale, trivial: false })
}

/// `c^{i,j}_{τ,T}(ηΛ̃, Λ̃)` from the maximal minors of `Λ̃ᵀ`, using
/// `Δ_{L}(Λ^{⊥ᵀ}) = Δ_{[n]∖L}(Λ̃ᵀ)`.
pub fn c_coeff<T: Scalar>(i: usize, j: usize, p: &PartialPairing, lt: &MinorTable<T>) -> Result<CCoeff<T>, TlError> {
    let full = (1u32 << p.n) - 1;
    marking_sum(i, j, p, |l| lt.get(full & !l), lt)
}

/// The same coefficient with `Λ^{⊥ᵀ}` given explicitly.
pub fn c_coeff_direct<T: Scalar>(
    i: usize,
    j: usize,
    p: &PartialPairing,
    lperp_t: &MinorTable<T>,
    lt: &MinorTable<T>,
) -> Result<CCoeff<T>, TlError> {
    marking_sum(i, j, p, |l| lperp_t.get(l), lt)
}

/// All `(i, j)` with `2 <= j - i <= n - 2` cyclically.
pub fn intervals(n: usize) -> Vec<(usize, usize)> {
    (1..=n).flat_map(|i| (2..=n - 2).map(move |len| (i, (i + len - 1) % n + 1))).collect()
}

/// One row of the coefficient table.
#[derive(Debug, Clone, Serialize)]
pub struct CEntry {
    pub i: usize,
    pub j: usize,
    pub pairing: String,
    pub c: f64,
    pub scale: f64,
    pub trivial: bool,
}

/// Every `c^{i,j}_{τ,T}(ηΛ̃, Λ̃)` for `Λ̃` of shape `2k x (k+2)`.
pub fn c_table<T: Scalar>(lambda: &Matrix<T>) -> Result<Vec<CEntry>, TlError> {
    let n = lambda.nrows();
    let k = n / 2;
    let lt = MinorTable::new(&lambda.transpose())?;
    let pairings = enumerate_pairings(k, n);
    let mut out = Vec::new();
    for (i, j) in intervals(n) {
        for p in &pairings {
            let c = c_coeff(i, j, p, &lt)?;
            out.push(CEntry { i, j, pairing: p.to_string(), c: c.value.to_f64(), scale: c.scale, trivial: c.trivial });
        }
    }
    Ok(out)
}

/// Smallest non-trivial `c / scale`; `None` if every coefficient is trivial.
pub fn min_relative_c(entries: &[CEntry]) -> Option<f64> {
    entries
        .iter()
        .filter(|e| !e.trivial)
        .map(|e| if e.scale > 0.0 { e.c / e.scale } else { 0.0 })
        .min_by(f64::total_cmp)
}

/// Exhaustive strong-positivity test; `k <= 4`.
pub fn is_strongly_positive(lambda: &Matrix<f64>, tol: f64) -> Result<bool, TlError> {
    let k = lambda.nrows() / 2;
    if !(2..=4).contains(&k) {
        return Err(TlError::Range { k, range: "2..=4" });
    }
    Ok(min_relative_c(&c_table(lambda)?).is_some_and(|m| m > tol))
}

/// How the `*` rows of `Λ_{0,k}ᵀ` are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    /// `e_1, e_3, ..., e_{2k-5}`
    Odd,
    /// `e_2, e_4, ..., e_{2k-4}`
    Even,
}

/// `Λ_{0,k}ᵀ` (2k x 2k): rows `e_{2i-1} + e_{2i}` for `i <= k-2`, then
/// `e_{2k-3}, ..., e_{2k}`, then the completion.
pub fn lambda0_t<T: Scalar>(k: usize, completion: Completion) -> Result<Matrix<T>, TlError> {
    if k < 3 {
        return Err(TlError::Range { k, range: ">= 3" });
    }
    let n = 2 * k;
    let mut m = Matrix::<T>::zeros(n, n);
    for i in 0..k - 2 {
        m[(i, 2 * i)] = T::one();
        m[(i, 2 * i + 1)] = T::one();
    }
    for a in 0..4 {
        m[(k - 2 + a, n - 4 + a)] = T::one();
    }
    for i in 0..k - 2 {
        let col = match completion {
            Completion::Odd => 2 * i,
            Completion::Even => 2 * i + 1,
        };
        m[(k + 2 + i, col)] = T::one();
    }
    if m.det()?.is_zero_tol(0.5) {
        return Err(TlError::PostCheck("Λ_0 completion is singular".into()));
    }
    Ok(m)
}

/// `π_{k-2,k+2}`: the first `k-2` and the first `k+2` rows.
pub fn pi_split<T: Scalar>(m: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>), TlError> {
    let k = m.nrows() / 2;
    let a: Vec<usize> = (0..k - 2).collect();
    let b: Vec<usize> = (0..k + 2).collect();
    Ok((m.select_rows(&a)?, m.select_rows(&b)?))
}

/// Coefficients at `Λ̃ = π_{k+2}(Λ_{0,k}ᵀ)ᵀ`, computed exactly. Both completions
/// must give the same table.
pub fn lambda0_table(k: usize) -> Result<Vec<CEntry>, TlError> {
    let top = |c| -> Result<Matrix<BigRational>, TlError> { Ok(pi_split(&lambda0_t::<BigRational>(k, c)?)?.1.transpose()) };
    let table = c_table(&top(Completion::Odd)?)?;
    let other = c_table(&top(Completion::Even)?)?;
    if table.iter().zip(&other).any(|(a, b)| a.c != b.c) {
        return Err(TlError::PostCheck("Λ_0 completions disagree".into()));
    }
    Ok(table)
}

/// `r_i(t)`: identity with the `{i, i+1}` block replaced by `[[cosh, sinh], [sinh, cosh]]`.
pub fn r_gen(n: usize, i: usize, t: f64) -> Matrix<f64> {
    r_gen_cs(n, i, t.cosh(), t.sinh())
}

/// `r_i` from a `(cosh, sinh)` pair.
pub fn r_gen_cs<T: Scalar>(n: usize, i: usize, c: T, s: T) -> Matrix<T> {
    let mut m = Matrix::identity(n);
    m[(i - 1, i - 1)] = c.clone();
    m[(i, i)] = c;
    m[(i - 1, i)] = s.clone();
    m[(i, i - 1)] = s;
    m
}

/// `(cosh, sinh) = ((1+u²)/(1-u²), 2u/(1-u²))` for rational `0 < u < 1`.
pub fn rational_angle<T: Scalar>(num: i64, den: i64) -> (T, T) {
    let (a, b) = (num * num, den * den);
    (T::from_ratio(b + a, b - a), T::from_ratio(2 * num * den, b - a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gen {
    X(usize),
    Y(usize),
    H(usize),
}

impl Gen {
    pub fn matrix(&self, n: usize, t: f64) -> Matrix<f64> {
        let mut m = Matrix::identity(n);
        match *self {
            Gen::X(i) => m[(i - 1, i)] = t,
            Gen::Y(i) => m[(i, i - 1)] = t,
            Gen::H(i) => m[(i - 1, i - 1)] = t,
        }
        m
    }

    /// The `r` generator standing in for this one.
    pub fn hat(&self, n: usize) -> usize {
        match *self {
            Gen::X(i) | Gen::Y(i) => i,
            Gen::H(i) => i.min(n - 1),
        }
    }
}

/// A factorisation word for generic totally positive `n x n` matrices: the
/// `y`'s along a reduced word of the longest permutation, all `h`'s, then the
/// `x`'s along the reversed word.
pub fn fz_word(n: usize) -> Vec<Gen> {
    let mut w = Vec::new();
    for a in (1..n).rev() {
        w.extend((a..n).map(Gen::Y));
    }
    w.extend((1..=n).map(Gen::H));
    for a in 1..n {
        w.extend((a..n).rev().map(Gen::X));
    }
    w
}

fn product<T: Scalar>(n: usize, mats: impl Iterator<Item = Matrix<T>>) -> Result<Matrix<T>, TlError> {
    let mut acc = Matrix::identity(n);
    for m in mats {
        acc = acc.mul(&m)?;
    }
    Ok(acc)
}

/// `M(t)` for the word.
pub fn word_matrix(n: usize, word: &[Gen], t: &[f64]) -> Result<Matrix<f64>, TlError> {
    product(n, word.iter().zip(t).map(|(g, &s)| g.matrix(n, s)))
}

/// `M̂(t)`: every generator replaced by its `r`.
pub fn hat_matrix(n: usize, word: &[Gen], t: &[f64]) -> Result<Matrix<f64>, TlError> {
    product(n, word.iter().zip(t).map(|(g, &s)| r_gen(n, g.hat(n), s)))
}

/// `M̂` with each letter given as a `(cosh, sinh)` pair.
pub fn hat_matrix_cs<T: Scalar>(n: usize, word: &[Gen], cs: &[(T, T)]) -> Result<Matrix<T>, TlError> {
    product(n, word.iter().zip(cs).map(|(g, (c, s))| r_gen_cs(n, g.hat(n), c.clone(), s.clone())))
}

/// Strongly positive `Λ̃ = (top k+2 rows of Λ_{0,k}ᵀ M̂(t))ᵀ` for the word
/// [`fz_word`]`(2k)`, one parameter per letter.
pub fn strongly_positive_lambda(k: usize, t: &[f64]) -> Result<LambdaMatrix, TlError> {
    if k < 3 {
        return Err(TlError::Range { k, range: ">= 3" });
    }
    let n = 2 * k;
    let word = fz_word(n);
    if t.len() != word.len() {
        return Err(TlError::ParamCount { expected: word.len(), got: t.len() });
    }
    if let Some(p) = t.iter().position(|&s| !(s > 0.0)) {
        return Err(TlError::NonPositive(p + 1));
    }
    let m = hat_matrix(n, &word, t)?;
    let eta = eta::<f64>(n)?;
    let drift = m.transpose().mul(&eta)?.mul(&m)?;
    let bad = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| (drift[(r, c)] - eta[(r, c)]).abs()).fold(0.0, f64::max);
    if bad > 1e-8 * m.max_abs().powi(2) {
        return Err(TlError::PostCheck(format!("M̂ is not η-orthogonal ({bad:e})")));
    }
    let lambda = lambda_from_hat(k, &m)?;
    if !is_positive_matrix(&lambda, 1e-12) {
        return Err(TlError::PostCheck("Λ̃ is not positive".into()));
    }
    Ok(LambdaMatrix::new(lambda, Grade::StronglyPositive)?)
}

/// `(top k+2 rows of Λ_{0,k}ᵀ M̂)ᵀ`.
pub fn lambda_from_hat<T: Scalar>(k: usize, m_hat: &Matrix<T>) -> Result<Matrix<T>, TlError> {
    let (_, top) = pi_split(&lambda0_t::<T>(k, Completion::Odd)?.mul(m_hat)?)?;
    Ok(top.transpose())
}

/// Exact strongly positive `Λ̃` with every letter at the rational angle `u = num/den`.
pub fn strong_lambda_exact(k: usize, num: i64, den: i64) -> Result<Matrix<BigRational>, TlError> {
    if !(0 < num && num < den) {
        return Err(TlError::NonPositive(1));
    }
    let n = 2 * k;
    let word = fz_word(n);
    let cs = vec![rational_angle::<BigRational>(num, den); word.len()];
    lambda_from_hat(k, &hat_matrix_cs(n, &word, &cs)?)
}

/// The default parameters: every letter at `t = 1/5`.
pub fn default_strong_params(k: usize) -> Vec<f64> {
    vec![0.2; fz_word(2 * k).len()]
}

pub fn default_strong_lambda(k: usize) -> Result<LambdaMatrix, TlError> {
    strongly_positive_lambda(k, &default_strong_params(k))
}

/// Checks that the plain word product is totally positive at these parameters.
pub fn word_is_totally_positive(n: usize, t: &[f64]) -> Result<bool, TlError> {
    let word = fz_word(n);
    Ok(is_totally_positive(&word_matrix(n, &word, t)?, 1e-13)?)
}

/// Temperley–Lieb immanants of `C` (k x n) by least squares over all pairs
/// `(A, B)`, with the residual relative to the largest `Δ_A Δ_B`.
pub fn immanants(c: &Matrix<f64>, pairings: &[PartialPairing]) -> Result<(Vec<f64>, f64), TlError> {
    let (k, n) = c.shape();
    if k > 3 {
        return Err(TlError::Range { k, range: "<= 3" });
    }
    let pl = MinorTable::new(c)?;
    let sets: Vec<u32> = (0..n).combinations(k).map(|s| s.iter().fold(0, |m, &x| m | (1 << x))).collect();
    let mut by_key: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    for (idx, p) in pairings.iter().enumerate() {
        by_key.entry((p.t_mask(), p.support_mask())).or_default().push(idx);
    }
    let pairs: Vec<(u32, u32)> = sets.iter().enumerate().flat_map(|(x, &a)| sets[x..].iter().map(move |&b| (a, b))).collect();
    let mut m = DMatrix::<f64>::zeros(pairs.len(), pairings.len());
    let mut rhs = DVector::<f64>::zeros(pairs.len());
    for (row, &(a, b)) in pairs.iter().enumerate() {
        rhs[row] = pl.get(a) * pl.get(b);
        for &idx in by_key.get(&(a & b, a ^ b)).into_iter().flatten() {
            if pairings[idx].compatible(a, b) {
                m[(row, idx)] = 1.0;
            }
        }
    }
    let svd = m.clone().svd(true, true);
    let x = svd.solve(&rhs, 1e-12).map_err(|e| TlError::PostCheck(e.to_string()))?;
    let resid = (&m * &x - &rhs).amax() / rhs.amax().max(f64::MIN_POSITIVE);
    Ok((x.iter().copied().collect(), resid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ampl::TwistorTable;
    use crate::bcfw::{enumerate_bcfw, sample_cell_rng};
    use crate::moves::{cyc_lambda, inc_inv_lambda, rot_inv_lambda, Angle};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pairing_counts() {
        assert_eq!(enumerate_pairings(1, 2).len(), 3);
        assert_eq!(enumerate_pairings(2, 4).len(), 20);
        for p in enumerate_pairings(3, 6) {
            assert_eq!(2 * p.t.len() + p.support_mask().count_ones() as usize, 6);
            assert!(non_crossing(&p.tau));
        }
    }

    #[test]
    fn complementary_pairs_are_full_pairings() {
        let all = enumerate_pairings(3, 6);
        let a = bit(1) | bit(3) | bit(4);
        let b = 0b111111 & !a;
        let hits: Vec<_> = all.iter().filter(|p| p.compatible(a, b)).collect();
        assert!(!hits.is_empty());
        for p in hits {
            assert!(p.t.is_empty());
            assert_eq!(p.support_mask(), 0b111111);
            for l in labels(a) {
                assert!(b & bit(p.tau[l - 1]) != 0);
            }
        }
    }

    #[test]
    fn few_special_arcs_are_trivial() {
        let p = PartialPairing { n: 6, k: 3, tau: vec![2, 1, 4, 3, 6, 5], t: vec![] };
        let lt = MinorTable::new(&lambda0_t::<f64>(3, Completion::Odd).unwrap().select_rows(&[0, 1, 2, 3, 4]).unwrap()).unwrap();
        // I(2,4) = {3,4} meets only (1 2)? no: (1 2) misses it, (3 4) lies inside
        let c = c_coeff(2, 4, &p, &lt).unwrap();
        assert!(c.trivial && c.value == 0.0);
        let c = c_coeff(1, 3, &p, &lt).unwrap();
        assert!(!c.trivial);
    }

    #[test]
    fn lambda0_is_eta_compatible() {
        for k in 3..=5 {
            let m = lambda0_t::<BigRational>(k, Completion::Odd).unwrap();
            assert_eq!(m.row(0)[..2], [q1(), q1()]);
            let (perp, top) = pi_split(&m).unwrap();
            // Λ^{⊥ᵀ} η Λ^⊥ = 0 and Λ^{⊥ᵀ} η Λ̃ = 0
            let g = perp.mul(&eta(2 * k).unwrap()).unwrap().mul(&top.transpose()).unwrap();
            assert!(g.rows_vec().iter().flatten().all(|x| x.is_zero_tol(0.0)));
        }
    }


    fn q1() -> BigRational {
        <BigRational as Scalar>::one()
    }

    fn lemma_l0(k: usize) {
        let table = lambda0_table(k).unwrap();
        assert!(table.iter().all(|e| e.c >= 0.0), "negative c on Λ_0 at k={k}");
    }

    #[test]
    fn l0_coefficients_nonnegative_k3() {
        lemma_l0(3);
    }

    #[test]
    fn r_generators_preserve_eta() {
        let n = 6;
        let e = eta::<f64>(n).unwrap();
        assert_eq!(r_gen(n, 2, 0.0), Matrix::identity(n));
        for i in 1..n {
            let r = r_gen(n, i, 0.7);
            let d = r.transpose().mul(&e).unwrap().mul(&r).unwrap();
            for a in 0..n {
                for b in 0..n {
                    assert!((d[(a, b)] - e[(a, b)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn word_and_hat_are_totally_positive() {
        let n = 6;
        let t = default_strong_params(3);
        assert!(word_is_totally_positive(n, &t).unwrap());
        assert!(is_totally_positive(&hat_matrix(n, &fz_word(n), &t).unwrap(), 1e-13).unwrap());
    }

    #[test]
    fn strong_lambda_k3_is_strongly_positive() {
        let l = default_strong_lambda(3).unwrap();
        assert!(is_strongly_positive(&l.entries, 1e-12).unwrap());
    }

    #[test]
    fn detector_rejects_flipped_row_and_l0() {
        let mut l = default_strong_lambda(3).unwrap().entries;
        for c in 0..l.ncols() {
            l[(0, c)] = -l[(0, c)];
        }
        assert!(!is_strongly_positive(&l, 1e-12).unwrap());
        let (_, top) = pi_split(&lambda0_t::<f64>(3, Completion::Odd).unwrap()).unwrap();
        assert!(!is_strongly_positive(&top.transpose(), 1e-12).unwrap());
    }

    #[test]
    fn direct_and_complement_routes_agree() {
        let k = 3;
        let n = 2 * k;
        let m = lambda0_t::<f64>(k, Completion::Odd).unwrap().mul(&hat_matrix(n, &fz_word(n), &default_strong_params(k)).unwrap()).unwrap();
        let (perp, top) = pi_split(&m).unwrap();
        let (pt, lt) = (MinorTable::new(&perp).unwrap(), MinorTable::new(&top).unwrap());
        let mut ratio = None;
        for (i, j) in intervals(n) {
            for p in enumerate_pairings(k, n) {
                let a = c_coeff(i, j, &p, &lt).unwrap();
                let b = c_coeff_direct(i, j, &p, &pt, &lt).unwrap();
                if a.trivial {
                    continue;
                }
                let r = b.value / a.value;
                let r0 = *ratio.get_or_insert(r);
                assert!((r - r0).abs() < 1e-9 * r0.abs(), "{i} {j} {p}: {r} vs {r0}");
            }
        }
    }

    #[test]
    fn immanant_decomposition_k3() {
        let k = 3;
        let n = 2 * k;
        let lam = default_strong_lambda(k).unwrap().entries;
        let lt = MinorTable::new(&lam.transpose()).unwrap();
        let pairings = enumerate_pairings(k, n);
        let seq = &enumerate_bcfw(k)[0];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let c = sample_cell_rng(seq, &mut rng).unwrap().matrix;
            let (imm, resid) = immanants(&c, &pairings).unwrap();
            assert!(resid < 1e-10);
            let big = imm.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            assert!(imm.iter().all(|&x| x >= -1e-9 * big));
            let y = c.mul(&lam).unwrap();
            let tw = TwistorTable::new(&y, &lam).unwrap();
            for (i, j) in intervals(n) {
                let s = tw.mandelstam(&cyclic_interval(i % n + 1, j, n));
                let rhs: f64 = pairings.iter().zip(&imm).map(|(p, d)| c_coeff(i, j, p, &lt).unwrap().value * d).sum();
                assert!((s - rhs).abs() <= 1e-9 * s.abs().max(rhs.abs()), "({i},{j}): {s} vs {rhs}");
            }
        }
    }

    #[test]
    fn exact_strong_lambda_certified_k3() {
        let n = 6;
        let cs = vec![rational_angle::<BigRational>(1, 5); fz_word(n).len()];
        assert!(is_totally_positive(&hat_matrix_cs(n, &fz_word(n), &cs).unwrap(), 0.0).unwrap());
        let tab = c_table(&strong_lambda_exact(3, 1, 5).unwrap()).unwrap();
        assert!(tab.iter().filter(|e| !e.trivial).all(|e| e.c > 0.0));
        assert_eq!(tab.iter().filter(|e| !e.trivial).count(), 294);
    }

    #[test]
    fn rational_angle_is_hyperbolic() {
        let (c, s) = rational_angle::<BigRational>(2, 7);
        assert_eq!(c.clone() * c - s.clone() * s, q1());
    }

    fn shifted(p: &PartialPairing) -> PartialPairing {
        let n = p.n;
        let up = |l: usize| l % n + 1;
        let mut tau = vec![0; n];
        for l in 1..=n {
            tau[up(l) - 1] = up(p.tau[l - 1]);
        }
        let mut t: Vec<usize> = p.t.iter().map(|&l| up(l)).collect();
        t.sort_unstable();
        PartialPairing { n, k: p.k, tau, t }
    }

    #[test]
    fn cyclic_relabelling_invariance() {
        let k = 3;
        let n = 2 * k;
        let lam = default_strong_lambda(k).unwrap().entries;
        let cyc = cyc_lambda(&lam).unwrap();
        let (a, b) = (MinorTable::new(&lam.transpose()).unwrap(), MinorTable::new(&cyc.transpose()).unwrap());
        let up = |l: usize| l % n + 1;
        for (i, j) in intervals(n) {
            for p in enumerate_pairings(k, n) {
                let x = c_coeff(up(i), up(j), &shifted(&p), &b).unwrap();
                let y = c_coeff(i, j, &p, &a).unwrap();
                assert_eq!(x.trivial, y.trivial);
                assert!((x.value - y.value).abs() <= 1e-9 * x.scale.max(1.0), "({i},{j}) {p}: {} vs {}", x.value, y.value);
            }
        }
    }

    #[test]
    fn move_closure_k3() {
        let lam = default_strong_lambda(3).unwrap().entries;
        assert!(is_strongly_positive(&cyc_lambda(&lam).unwrap(), 1e-12).unwrap());
        for i in 1..=6 {
            let r = rot_inv_lambda(&lam, i, &Angle::from_sinh(0.8)).unwrap();
            assert!(is_strongly_positive(&r, 1e-12).unwrap(), "Rot_{i}^-1");
        }
        let big = default_strong_lambda(4).unwrap().entries;
        for i in 1..8 {
            let r = inc_inv_lambda(&big, i).unwrap();
            assert!(is_strongly_positive(&r, 1e-12).unwrap(), "Inc_{i}^-1");
        }
    }
}
