//! Kinematic data: `Λ`, the map `C ↦ CΛ`, twistors `⟨Y i j⟩`, the λ plane and
//! Mandelstam variables.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactmat::{
    eta_gram, is_positive_matrix, min_relative_maximal_minor, rank, MatError, Matrix, Scalar,
};
use crate::involution::cyclic_interval;

#[derive(Debug, Error)]
pub enum AmplError {
    #[error("nodes must be positive and strictly increasing")]
    BadNodes,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("Y has rank {got}, expected {want}")]
    RankDrop { got: usize, want: usize },
    #[error("all twistors vanish")]
    ZeroTwistors,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Mat(#[from] MatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grade {
    Positive,
    StronglyPositive,
    Unknown,
}

/// A `2k x (k+2)` kinematic matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaMatrix {
    pub k: usize,
    pub entries: Matrix<f64>,
    pub grade: Grade,
}

impl LambdaMatrix {
    pub fn new(entries: Matrix<f64>, grade: Grade) -> Result<Self, AmplError> {
        let (r, c) = entries.shape();
        if r % 2 == 1 || c != r / 2 + 2 {
            return Err(AmplError::Shape(format!("Λ must be 2k x (k+2), got {r}x{c}")));
        }
        Ok(LambdaMatrix { k: r / 2, entries, grade })
    }

    /// Grades as positive when every maximal minor is, else unknown.
    pub fn graded(entries: Matrix<f64>, tol: f64) -> Result<Self, AmplError> {
        let g = if is_positive_matrix(&entries, tol) { Grade::Positive } else { Grade::Unknown };
        Self::new(entries, g)
    }

    pub fn min_relative_minor(&self) -> f64 {
        min_relative_maximal_minor(&self.entries)
    }

    pub fn to_csv<W: Write>(&self, w: W) -> Result<(), AmplError> {
        write_matrix_csv(&self.entries, w)
    }

    pub fn from_csv<R: Read>(r: R, tol: f64) -> Result<Self, AmplError> {
        Self::graded(read_matrix_csv(r)?, tol)
    }
}

/// A headerless CSV of numbers, one matrix row per line.
pub fn read_matrix_csv<R: Read>(r: R) -> Result<Matrix<f64>, AmplError> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
    let mut rows = Vec::new();
    for rec in rd.deserialize() {
        let row: Vec<f64> = rec?;
        rows.push(row);
    }
    Ok(Matrix::from_rows(rows)?)
}

pub fn write_matrix_csv<W: Write>(m: &Matrix<f64>, w: W) -> Result<(), AmplError> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for r in 0..m.nrows() {
        wr.serialize(m.row(r))?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `Λ_{ij} = node_i^{j-1}`; nodes default to `1..=2k`.
pub fn vandermonde_lambda(k: usize, nodes: Option<&[f64]>) -> Result<LambdaMatrix, AmplError> {
    let default: Vec<f64> = (1..=2 * k).map(|i| i as f64).collect();
    let nodes = nodes.unwrap_or(&default);
    if nodes.len() != 2 * k || nodes[0] <= 0.0 || nodes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AmplError::BadNodes);
    }
    let m = Matrix::from_fn(2 * k, k + 2, |i, j| nodes[i].powi(j as i32));
    LambdaMatrix::new(m, Grade::Positive)
}

/// Exact Vandermonde on the integer nodes `1..=2k`.
pub fn vandermonde_exact<T: Scalar>(k: usize) -> Matrix<T> {
    Matrix::from_fn(2 * k, k + 2, |i, j| T::from_i64(((i + 1) as i64).pow(j as u32)))
}

/// `Y = CΛ`, checking that the rank stays `k`.
pub fn amap(c: &Matrix<f64>, lambda: &Matrix<f64>) -> Result<Matrix<f64>, AmplError> {
    if c.ncols() != lambda.nrows() {
        return Err(AmplError::Shape(format!("C is {:?}, Λ is {:?}", c.shape(), lambda.shape())));
    }
    let y = c.mul(lambda)?;
    let r = rank(&y, 1e-10);
    if r != c.nrows() {
        return Err(AmplError::RankDrop { got: r, want: c.nrows() });
    }
    Ok(y)
}

/// Antisymmetric form `W_{pq} = det[Y; e_p; e_q]`, so `⟨Y a b⟩ = aᵀ W b`.
pub fn twistor_form<T: Scalar>(y: &Matrix<T>) -> Result<Matrix<T>, AmplError> {
    let (k, m) = y.shape();
    if m != k + 2 {
        return Err(AmplError::Shape(format!("Y must be k x (k+2), got {k}x{m}")));
    }
    let mut w = Matrix::zeros(m, m);
    let all: Vec<usize> = (0..k).collect();
    for p in 0..m {
        for q in p + 1..m {
            // det[Y; e_p; e_q] = (-1)^{p+q+1} det(Y without columns p, q)
            let cols: Vec<usize> = (0..m).filter(|&c| c != p && c != q).collect();
            let d = y.select(&all, &cols)?.det()?;
            let v = if (p + q) % 2 == 0 { -d } else { d };
            w[(p, q)] = v.clone();
            w[(q, p)] = -v;
        }
    }
    Ok(w)
}

pub fn twistor<T: Scalar>(y: &Matrix<T>, lambda: &Matrix<T>, i: usize, j: usize) -> Result<T, AmplError> {
    let mut stacked = y.rows_vec();
    stacked.push(lambda.row(i - 1).to_vec());
    stacked.push(lambda.row(j - 1).to_vec());
    Ok(Matrix::from_rows(stacked)?.det()?)
}

/// The antisymmetric table `⟪Y⟫_{ij} = ⟨Y i j⟩`, 1-based accessors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistorTable<T: Scalar> {
    pub values: Matrix<T>,
}

impl<T: Scalar> TwistorTable<T> {
    pub fn new(y: &Matrix<T>, lambda: &Matrix<T>) -> Result<Self, AmplError> {
        if y.ncols() != lambda.ncols() {
            return Err(AmplError::Shape(format!("Y is {:?}, Λ is {:?}", y.shape(), lambda.shape())));
        }
        let w = twistor_form(y)?;
        let full = lambda.mul(&w)?.mul(&lambda.transpose())?;
        let n = full.nrows();
        let values = Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => full[(i, j)].clone(),
            std::cmp::Ordering::Equal => T::zero(),
            std::cmp::Ordering::Greater => -full[(j, i)].clone(),
        });
        Ok(TwistorTable { values })
    }

    pub fn from_matrix(values: Matrix<T>) -> Self {
        TwistorTable { values }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[(i - 1, j - 1)].clone()
    }

    pub fn mandelstam(&self, set: &[usize]) -> T {
        mandelstam_from(|i, j| self.get(i, j), set)
    }
}

impl TwistorTable<f64> {
    /// Largest `|⟨i j⟩|`.
    pub fn scale(&self) -> f64 {
        self.values.max_abs()
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.values[(i, j)] + self.values[(j, i)]).abs());
            }
        }
        worst / self.scale().max(f64::MIN_POSITIVE)
    }

    /// Worst relative residual of the three-term relations over all quadruples.
    pub fn plucker_residual(&self) -> f64 {
        let n = self.n();
        let s = self.scale().powi(2).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for a in 1..=n {
            for b in a + 1..=n {
                for c in b + 1..=n {
                    for d in c + 1..=n {
                        let r = self.get(a, b) * self.get(c, d) + self.get(a, d) * self.get(b, c)
                            - self.get(a, c) * self.get(b, d);
                        worst = worst.max(r.abs() / s);
                    }
                }
            }
        }
        worst
    }

    pub fn rank(&self, tol: f64) -> usize {
        rank(&self.values, tol)
    }

    /// Rows `i, j` of the table for the best-conditioned pair: the largest
    /// `|⟨i i+1⟩|` over consecutive pairs, else the global maximum.
    pub fn lambda_plane(&self) -> Result<Matrix<f64>, AmplError> {
        let n = self.n();
        let scale = self.scale();
        if scale == 0.0 {
            return Err(AmplError::ZeroTwistors);
        }
        let mut best = (1, 2, 0.0);
        for i in 1..n {
            let v = self.get(i, i + 1).abs();
            if v > best.2 {
                best = (i, i + 1, v);
            }
        }
        if best.2 <= 1e-6 * scale {
            for i in 1..=n {
                for j in i + 1..=n {
                    let v = self.get(i, j).abs();
                    if v > best.2 {
                        best = (i, j, v);
                    }
                }
            }
        }
        let (i, j, _) = best;
        Ok(Matrix::from_rows(vec![self.values.row(i - 1).to_vec(), self.values.row(j - 1).to_vec()])?)
    }
}

/// `S_I = Σ_{i<j ∈ I} (-1)^{i-j+1} ⟨i j⟩²` over 1-based labels.
pub fn mandelstam_from<T: Scalar>(tw: impl Fn(usize, usize) -> T, set: &[usize]) -> T {
    let mut s = set.to_vec();
    s.sort_unstable();
    let mut acc = T::zero();
    for (a, &i) in s.iter().enumerate() {
        for &j in &s[a + 1..] {
            let t = tw(i, j);
            let sq = t.clone() * t;
            acc = if (j - i) % 2 == 1 { acc + sq } else { acc - sq };
        }
    }
    acc
}

pub fn mandelstam(y: &Matrix<f64>, lambda: &Matrix<f64>, set: &[usize]) -> Result<f64, AmplError> {
    Ok(TwistorTable::new(y, lambda)?.mandelstam(set))
}

/// Largest `|λ η λᵀ|` relative to the squared entry scale.
pub fn momentum_residual(lambda_plane: &Matrix<f64>) -> Result<f64, AmplError> {
    let g = eta_gram(lambda_plane)?;
    let s = lambda_plane.max_abs().powi(2).max(f64::MIN_POSITIVE);
    Ok(g.max_abs() / s)
}

/// All cyclically consecutive `I ⊂ [2k]` with `1 < |I| < 2k-1`, each set once.
pub fn consecutive_sets(k: usize) -> Vec<Vec<usize>> {
    let n = 2 * k;
    let mut out = Vec::new();
    for len in 2..n - 1 {
        for start in 1..=n {
            let end = (start + len - 2) % n + 1;
            let mut s = cyclic_interval(start, end, n);
            s.sort_unstable();
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    out
}

/// Monomial scale for Mandelstam tolerances: the sum of `⟨i j⟩²` over `I`.
pub fn mandelstam_scale(table: &TwistorTable<f64>, set: &[usize]) -> f64 {
    let mut acc = 0.0;
    for (a, &i) in set.iter().enumerate() {
        for &j in &set[a + 1..] {
            acc += table.get(i, j).powi(2);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmat::{rank as mrank, row_span_equal, times_eta};
    use crate::moves::{arc_matrix, Angle};
    use num::BigRational;
    use proptest::prelude::*;

    fn k3_point(a: f64, b: f64, c: f64) -> Matrix<f64> {
        let x = arc_matrix(&Matrix::zeros(0, 0), 2, 1, &[]).unwrap();
        let x = arc_matrix(&x, 3, 2, &[Angle::from_sinh(a)]).unwrap();
        arc_matrix(&x, 4, 2, &[Angle::from_sinh(b), Angle::from_sinh(c)]).unwrap()
    }

    #[test]
    fn vandermonde_checks() {
        let l = vandermonde_lambda(4, None).unwrap();
        assert_eq!(l.entries[(7, 5)], 8f64.powi(5));
        assert!(is_positive_matrix(&l.entries, 1e-14));
        assert!(vandermonde_lambda(2, Some(&[1.0, 2.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn twistor_matches_direct_determinant() {
        let c = k3_point(0.7, 1.9, 0.4);
        let lam = vandermonde_lambda(3, None).unwrap().entries;
        let y = amap(&c, &lam).unwrap();
        let t = TwistorTable::new(&y, &lam).unwrap();
        for i in 1..=6 {
            for j in 1..=6 {
                let d = twistor(&y, &lam, i, j).unwrap();
                assert!((d - t.get(i, j)).abs() <= 1e-9 * t.scale());
            }
        }
        assert!(t.antisymmetry_residual() < 1e-12);
    }

    #[test]
    fn exact_twistor_table() {
        let c = Matrix::<BigRational>::from_i64_rows(&[&[1, 0, 0, -1], &[0, 1, 1, 0]]);
        let lam = vandermonde_exact::<BigRational>(2);
        let y = c.mul(&lam).unwrap();
        let t = TwistorTable::new(&y, &lam).unwrap();
        for i in 1..=4 {
            for j in 1..=4 {
                assert_eq!(t.get(i, j), twistor(&y, &lam, i, j).unwrap());
            }
        }
    }

    #[test]
    fn interior_consecutive_signs_and_135() {
        let c = k3_point(1.1, 0.5, 2.3);
        let lam = vandermonde_lambda(3, None).unwrap().entries;
        let t = TwistorTable::new(&amap(&c, &lam).unwrap(), &lam).unwrap();
        let sign = if t.get(1, 2) > 0.0 { 1.0 } else { -1.0 };
        for i in 1..6 {
            assert!(sign * t.get(i, i + 1) > 0.0);
        }
        assert!(sign * -t.get(1, 6) > 0.0);
        assert!(t.mandelstam(&[1, 3, 5]) < 0.0);
        assert_eq!(t.mandelstam(&[]), 0.0);
        assert_eq!(t.mandelstam(&[4]), 0.0);
    }

    #[test]
    fn consecutive_set_count() {
        // lengths 2..2k-2, 2k starts each, halved by complement only in count, not identity
        assert_eq!(consecutive_sets(3).len(), 6 * 3);
        assert!(consecutive_sets(3).contains(&vec![1, 5, 6]));
    }

    #[test]
    fn csv_roundtrip() {
        let l = vandermonde_lambda(3, None).unwrap();
        let mut buf = Vec::new();
        l.to_csv(&mut buf).unwrap();
        let back = LambdaMatrix::from_csv(buf.as_slice(), 1e-12).unwrap();
        assert_eq!(back.entries, l.entries);
        assert_eq!(back.grade, Grade::Positive);
    }

    proptest! {
        #[test]
        fn twistor_table_laws(a in 0.2f64..5.0, b in 0.2f64..5.0, c in 0.2f64..5.0) {
            let cm = k3_point(a, b, c);
            let lam = vandermonde_lambda(3, None).unwrap().entries;
            let y = amap(&cm, &lam).unwrap();
            let t = TwistorTable::new(&y, &lam).unwrap();
            prop_assert_eq!(t.rank(1e-9), 2);
            prop_assert!(t.plucker_residual() < 1e-9);
            let lp = t.lambda_plane().unwrap();
            prop_assert!(momentum_residual(&lp).unwrap() < 1e-9);
            let stacked = cm.vstack(&times_eta(&lp)).unwrap();
            prop_assert_eq!(mrank(&stacked, 1e-9), 3);
            for set in consecutive_sets(3) {
                let comp: Vec<usize> = (1..=6).filter(|x| !set.contains(x)).collect();
                let (s1, s2) = (t.mandelstam(&set), t.mandelstam(&comp));
                prop_assert!((s1 - s2).abs() <= 1e-9 * t.scale().powi(2));
            }
            // Δ_{ij}(λ) ∝ ⟨ij⟩: row spans of λ and a rank-2 factor agree
            let other = Matrix::from_rows(vec![t.values.row(0).to_vec(), t.values.row(3).to_vec()]).unwrap();
            prop_assert!(row_span_equal(&lp, &other, 1e-7).unwrap());
        }
    }
}
