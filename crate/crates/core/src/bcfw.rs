//! Arc-sequences, BCFW cells, sampling, codimension-1 boundaries, boundary
//! triplets and vertex-separators.
//!
//! Vertex ids are 1-based and follow the Rot moves in application order:
//! the `Arc_3` contributes one vertex, each `Arc_4` two (its first Rot is `v_1`).

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};
use thiserror::Error;

use crate::dd::{Dd, Real};
use crate::exactmat::{is_eta_isotropic, orthonormal_rows, plucker_vector, plucker_vector_tol, Matrix};
use crate::involution::{wrap, Involution};
use crate::moves::{
    arc_involution, arc_rot_indices, inc_inv_involution, inc_matrix, rot_involution, rot_matrix, rot_matrix_at_infinity, Angle, MoveError,
};
use crate::twistor_expr::{mandelstam_expr, promote_scalar, Expr, ExprError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BcfwError {
    #[error("bad arc-sequence: {0}")]
    Parse(String),
    #[error("step {0} is not reduced")]
    NotReduced(usize),
    #[error("not a BCFW sequence: {0}")]
    NotBcfw(String),
    #[error("expected {expected} angles, got {got}")]
    AngleCount { expected: usize, got: usize },
    #[error("angle {0} is not positive")]
    NonPositiveAngle(usize),
    #[error("vertex {0} out of range")]
    Vertex(usize),
    #[error("vertex {0} is not 4-native in this sequence")]
    NotNative(usize),
    #[error("no reduced boundary cell matches the limit at vertex {0}")]
    NoBoundary(usize),
    #[error(transparent)]
    Move(#[from] MoveError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArcStep {
    pub n: usize,
    pub l: usize,
}

/// `Arc_{2,1}` followed by `steps`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ArcSequence {
    pub steps: Vec<ArcStep>,
}

impl ArcSequence {
    pub fn new(steps: &[(usize, usize)]) -> Self {
        ArcSequence { steps: steps.iter().map(|&(n, l)| ArcStep { n, l }).collect() }
    }

    pub fn k(&self) -> usize {
        1 + self.steps.len()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.steps.iter().map(|s| (s.n, s.l)).collect()
    }

    pub fn angle_count(&self) -> usize {
        self.steps.iter().map(|s| s.n - 2).sum()
    }

    /// Involutions after `Arc_{2,1}` and after each step.
    pub fn involutions(&self) -> Result<Vec<Involution>, BcfwError> {
        let mut t: Involution = "(12)".parse().expect("base involution");
        let mut out = vec![t.clone()];
        for s in &self.steps {
            t = arc_involution(&t, s.n, s.l)?;
            out.push(t.clone());
        }
        Ok(out)
    }

    pub fn involution(&self) -> Result<Involution, BcfwError> {
        Ok(self.involutions()?.pop().expect("nonempty"))
    }

    /// Reduced iff every Arc adds exactly `n-2` crossings.
    pub fn is_reduced(&self) -> bool {
        let Ok(ts) = self.involutions() else { return false };
        let mut rots = 0;
        for (s, t) in self.steps.iter().zip(&ts[1..]) {
            rots += s.n - 2;
            if t.crossing_number() != rots {
                return false;
            }
        }
        true
    }

    /// The literal predicate: before `Arc_{n,ℓ}` the cyclic interval
    /// `ℓ, ..., ℓ+n-3` contains no arc.
    pub fn interval_reduced(&self) -> bool {
        let Ok(ts) = self.involutions() else { return false };
        self.steps.iter().zip(&ts).all(|(s, t)| {
            let set: Vec<usize> = (0..s.n.saturating_sub(2)).map(|j| wrap((s.l + j) as i64, t.n())).collect();
            !t.contains_arc(&set)
        })
    }

    pub fn is_bcfw(&self) -> bool {
        self.steps.iter().enumerate().all(|(j, s)| s.n == if j == 0 { 3 } else { 4 } && s.l % 2 == 0)
            && self.is_reduced()
    }

    /// Rewrites `Arc_{4,ℓ}` applied where `{ℓ, ℓ+1}` is an arc into `Arc_{3,ℓ}`, to a fixpoint.
    pub fn reduce(&self) -> ArcSequence {
        let mut cur = self.clone();
        loop {
            let Ok(ts) = cur.involutions() else { return cur };
            let hit = cur.steps.iter().zip(&ts).position(|(s, t)| {
                s.n == 4 && t.apply(s.l.min(t.n())) == wrap(s.l as i64 + 1, t.n())
            });
            match hit {
                Some(j) => cur.steps[j].n = 3,
                None => return cur,
            }
        }
    }

    /// `(step index, position inside the Arc)` for a 1-based vertex id.
    pub fn vertex_step(&self, vertex: usize) -> Result<(usize, usize), BcfwError> {
        let mut id = 0;
        for (j, s) in self.steps.iter().enumerate() {
            for r in 0..s.n - 2 {
                id += 1;
                if id == vertex {
                    return Ok((j, r));
                }
            }
        }
        Err(BcfwError::Vertex(vertex))
    }
}

impl fmt::Display for ArcSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A2,1")?;
        for s in &self.steps {
            write!(f, " A{},{}", s.n, s.l)?;
        }
        Ok(())
    }
}

impl FromStr for ArcSequence {
    type Err = BcfwError;

    /// Accepts `A2,1 A3,2 A4,2`; the leading `A2,1` is optional.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BcfwError::Parse(s.to_string());
        let mut steps = Vec::new();
        for (i, tok) in s.split_whitespace().enumerate() {
            let body = tok.strip_prefix('A').ok_or_else(bad)?;
            let (n, l) = body.split_once(',').ok_or_else(bad)?;
            let n: usize = n.parse().map_err(|_| bad())?;
            let l: usize = l.parse().map_err(|_| bad())?;
            if !(2..=4).contains(&n) || l == 0 {
                return Err(bad());
            }
            if i == 0 && n == 2 && l == 1 {
                continue;
            }
            steps.push(ArcStep { n, l });
        }
        Ok(ArcSequence { steps })
    }
}

impl Serialize for ArcSequence {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ArcSequence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All BCFW sequences for `k`, one per cell.
pub fn enumerate_bcfw(k: usize) -> Vec<ArcSequence> {
    if k < 2 {
        return Vec::new();
    }
    let mut words: Vec<Vec<ArcStep>> = vec![vec![ArcStep { n: 3, l: 2 }]];
    for j in 2..k {
        let mut next = Vec::new();
        for w in &words {
            for i in 1..=j {
                let mut w2 = w.clone();
                w2.push(ArcStep { n: 4, l: 2 * i });
                let seq = ArcSequence { steps: w2.clone() };
                if seq.is_reduced() {
                    next.push(w2);
                }
            }
        }
        words = next;
    }
    let mut seen = BTreeMap::new();
    for w in words {
        let seq = ArcSequence { steps: w };
        if let Ok(t) = seq.involution() {
            seen.entry(t).or_insert(seq);
        }
    }
    let mut out: Vec<ArcSequence> = seen.into_values().collect();
    out.sort();
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CellPoint {
    pub seq: ArcSequence,
    pub angles: Vec<Angle<f64>>,
    pub matrix: Matrix<f64>,
}

/// The point of the cell at the given angles (one per Rot, in order).
pub fn sample_cell(seq: &ArcSequence, angles: &[Angle<f64>]) -> Result<CellPoint, BcfwError> {
    if angles.len() != seq.angle_count() {
        return Err(BcfwError::AngleCount { expected: seq.angle_count(), got: angles.len() });
    }
    if let Some(i) = angles.iter().position(|a| !(a.sinh > 0.0)) {
        return Err(BcfwError::NonPositiveAngle(i + 1));
    }
    Ok(CellPoint { seq: seq.clone(), angles: angles.to_vec(), matrix: compose(seq, angles)? })
}

fn compose(seq: &ArcSequence, angles: &[Angle<f64>]) -> Result<Matrix<f64>, BcfwError> {
    Ok(compose_limit(seq, angles, None)?.expect("no limit taken"))
}

/// The point at the given angles, composed in `T` (sinh taken as exact).
pub fn cell_matrix<T: Real>(seq: &ArcSequence, angles: &[Angle<f64>]) -> Result<Matrix<T>, BcfwError> {
    if angles.len() != seq.angle_count() {
        return Err(BcfwError::AngleCount { expected: seq.angle_count(), got: angles.len() });
    }
    let mut c = Matrix::<T>::from_i64_rows(&[&[1, 1]]);
    let mut it = angles.iter();
    for s in &seq.steps {
        c = inc_matrix(&c, s.l)?;
        for idx in arc_rot_indices(s.n, s.l, c.nrows()) {
            c = rot_matrix(&c, idx, &it.next().expect("counted").lift())?;
        }
    }
    Ok(c)
}

/// Composition with one Rot (0-based slot) replaced by its limit.
fn compose_limit<T: Real>(
    seq: &ArcSequence,
    angles: &[Angle<f64>],
    limit: Option<(usize, Limit)>,
) -> Result<Option<Matrix<T>>, BcfwError> {
    let mut c = Matrix::<T>::from_i64_rows(&[&[1, 1]]);
    let mut slot = 0;
    for s in &seq.steps {
        c = inc_matrix(&c, s.l)?;
        for idx in arc_rot_indices(s.n, s.l, c.nrows()) {
            match limit {
                Some((at, Limit::Zero)) if at == slot => {}
                Some((at, Limit::Infinity)) if at == slot => match rot_matrix_at_infinity(&c, idx)? {
                    Some(m) => c = m,
                    None => return Ok(None),
                },
                _ => c = rot_matrix(&c, idx, &angles[slot].lift())?,
            }
            slot += 1;
        }
    }
    Ok(Some(c))
}

/// Angles `arcsinh(u)` with `u ~ U(0.2, 5)`.
pub fn random_angles<R: Rng>(rng: &mut R, count: usize) -> Vec<Angle<f64>> {
    (0..count).map(|_| Angle::from_sinh(rng.gen_range(0.2..5.0))).collect()
}

pub fn sample_cell_rng<R: Rng>(seq: &ArcSequence, rng: &mut R) -> Result<CellPoint, BcfwError> {
    let a = random_angles(rng, seq.angle_count());
    sample_cell(seq, &a)
}

/// The orthitroid cell containing `c`, read off its Plücker zero pattern.
/// Returns `None` when the pattern is not that of a fixed-point-free involution.
pub fn involution_of_point<T: Real>(c: &Matrix<T>, tol: f64) -> Option<Involution> {
    let c = orthonormal_rows(c, T::EPSILON.sqrt())?;
    let p = plucker_vector_tol(&c, T::EPSILON.sqrt()).ok()?;
    let p: Vec<f64> = p.values().map(|v| v.to_f64()).collect();
    let top = p.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let k = c.nrows();
    let n = c.ncols();
    let subsets: Vec<Vec<usize>> = itertools::Itertools::combinations(1..=n, k).collect();
    let nonzero: Vec<bool> = p.iter().map(|v| v.abs() > tol * top).collect();
    // I_i is the lexicographically first nonzero subset in the order starting at i
    let neck: Vec<Vec<usize>> = (1..=n)
        .map(|i| {
            let key = |s: &Vec<usize>| {
                let mut v: Vec<usize> = s.iter().map(|x| (x + n - i) % n).collect();
                v.sort_unstable();
                v
            };
            subsets.iter().zip(&nonzero).filter(|(_, &z)| z).map(|(s, _)| s).min_by_key(|s| key(s)).cloned()
        })
        .collect::<Option<_>>()?;
    let mut map = vec![0; n];
    for i in 1..=n {
        let cur = &neck[i - 1];
        let next = &neck[i % n];
        if !cur.contains(&i) {
            return None;
        }
        let added: Vec<usize> = next.iter().copied().filter(|x| *x == i || !cur.contains(x)).collect();
        if added.len() != 1 {
            return None;
        }
        map[i - 1] = added[0];
    }
    let t = Involution::from_map(map).ok()?;
    (t.basis_pattern() == nonzero).then_some(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    Zero,
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Internal,
    External,
}

#[derive(Debug, Clone, Serialize)]
pub struct Boundary {
    pub vertex: usize,
    pub limit: Limit,
    pub seq: ArcSequence,
    pub involution: Involution,
    pub kind: BoundaryKind,
}

/// Fixed angles used to locate limits; generic enough for every cell at `k <= 6`.
fn probe_angles(count: usize) -> Vec<Angle<f64>> {
    (0..count).map(|i| Angle::from_sinh(0.7 + 0.37 * i as f64)).collect()
}

/// The point at the given angles with one vertex sent to a limit; `None` if the limit drops rank.
pub fn limit_point_at<T: Real>(
    seq: &ArcSequence,
    angles: &[Angle<f64>],
    vertex: usize,
    limit: Limit,
) -> Result<Option<Matrix<T>>, BcfwError> {
    seq.vertex_step(vertex)?;
    if angles.len() != seq.angle_count() {
        return Err(BcfwError::AngleCount { expected: seq.angle_count(), got: angles.len() });
    }
    compose_limit(seq, angles, Some((vertex - 1, limit)))
}

pub fn limit_point<T: Real>(seq: &ArcSequence, vertex: usize, limit: Limit) -> Result<Option<Matrix<T>>, BcfwError> {
    limit_point_at(seq, &probe_angles(seq.angle_count()), vertex, limit)
}

/// Every reduced arc-sequence whose cell is `target`, found by peeling the
/// last Arc off the involution.
pub fn arc_sequences_for(target: &Involution) -> Vec<ArcSequence> {
    fn peel(t: &Involution, suffix: &mut Vec<(usize, usize)>, out: &mut Vec<ArcSequence>) {
        let k = t.k();
        if k == 1 {
            let pairs: Vec<_> = suffix.iter().rev().copied().collect();
            out.push(ArcSequence::new(&pairs));
            return;
        }
        for n in 2..=4 {
            for l in 1..=2 * k - 2 {
                let mut u = t.clone();
                for idx in arc_rot_indices(n, l, k).into_iter().rev() {
                    u = rot_involution(&u, idx).expect("index in range");
                }
                let Ok(prev) = inc_inv_involution(&u, l) else { continue };
                if t.crossing_number() != prev.crossing_number() + n - 2 {
                    continue;
                }
                suffix.push((n, l));
                peel(&prev, suffix, out);
                suffix.pop();
            }
        }
    }
    let mut out = Vec::new();
    if target.k() >= 1 {
        peel(target, &mut Vec::new(), &mut out);
    }
    out.sort();
    out
}

/// The reduced sequence for `target` differing from `seq` in the fewest steps.
fn nearest_sequence(seq: &ArcSequence, target: &Involution) -> Option<ArcSequence> {
    let dist = |c: &ArcSequence| seq.steps.iter().zip(&c.steps).filter(|(a, b)| a != b).count();
    arc_sequences_for(target).into_iter().min_by_key(|c| dist(c))
}

type RawBoundary = (usize, Limit, ArcSequence, Involution);

/// Memoised [`compute_raw_boundaries`]; every cell's list is needed again when
/// labelling the other cells of the same `k`.
fn raw_boundaries(seq: &ArcSequence) -> Result<Arc<Vec<RawBoundary>>, BcfwError> {
    static CACHE: OnceLock<Mutex<HashMap<ArcSequence, Arc<Vec<RawBoundary>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.lock().expect("cache lock").get(seq) {
        return Ok(v.clone());
    }
    let v = Arc::new(compute_raw_boundaries(seq)?);
    cache.lock().expect("cache lock").insert(seq.clone(), v.clone());
    Ok(v)
}

/// Codimension-1 boundaries, one per vertex, without the internal/external label.
fn compute_raw_boundaries(seq: &ArcSequence) -> Result<Vec<RawBoundary>, BcfwError> {
    let dim = seq.angle_count();
    let mut out = Vec::new();
    for v in 1..=dim {
        seq.vertex_step(v)?;
        let mut found = None;
        for limit in [Limit::Zero, Limit::Infinity] {
            let Some(c) = limit_point::<Dd>(seq, v, limit)? else { continue };
            let Some(t) = involution_of_point(&c, 1e-20) else { continue };
            if t.crossing_number() + 1 != dim {
                continue;
            }
            if let Some(cand) = nearest_sequence(seq, &t) {
                found = Some((v, limit, cand, t));
                break;
            }
        }
        out.push(found.ok_or(BcfwError::NoBoundary(v))?);
    }
    Ok(out)
}

/// Codimension-1 boundaries of a BCFW cell with their kind.
pub fn boundaries(seq: &ArcSequence) -> Result<Vec<Boundary>, BcfwError> {
    if !seq.is_bcfw() {
        return Err(BcfwError::NotBcfw(seq.to_string()));
    }
    let own = raw_boundaries(seq)?;
    let me = seq.involution()?;
    let mut others = Vec::new();
    for other in enumerate_bcfw(seq.k()) {
        if other.involution()? != me {
            others.extend(raw_boundaries(&other)?.iter().map(|b| b.3.clone()));
        }
    }
    Ok(own
        .iter()
        .map(|(vertex, limit, seq, involution)| {
            let kind = if others.contains(involution) { BoundaryKind::Internal } else { BoundaryKind::External };
            Boundary { vertex: *vertex, limit: *limit, seq: seq.clone(), involution: involution.clone(), kind }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryTriplet {
    pub plus: ArcSequence,
    pub zero: ArcSequence,
    pub minus: ArcSequence,
    pub vertex_plus: usize,
    pub vertex_minus: usize,
    pub involution: Involution,
}

/// Internal boundaries grouped by involution; each group has two parents.
pub fn boundary_triplets(k: usize) -> Result<Vec<BoundaryTriplet>, BcfwError> {
    let mut groups: BTreeMap<Involution, Vec<(ArcSequence, usize, ArcSequence)>> = BTreeMap::new();
    for seq in enumerate_bcfw(k) {
        for (v, _, bseq, t) in raw_boundaries(&seq)?.iter().cloned() {
            groups.entry(t).or_default().push((seq.clone(), v, bseq));
        }
    }
    let mut out = Vec::new();
    for (t, g) in groups {
        if g.len() == 2 {
            out.push(BoundaryTriplet {
                plus: g[0].0.clone(),
                zero: g[0].2.clone(),
                minus: g[1].0.clone(),
                vertex_plus: g[0].1,
                vertex_minus: g[1].1,
                involution: t,
            });
        } else if g.len() > 2 {
            return Err(BcfwError::NotBcfw(format!("boundary {t} has {} parents", g.len())));
        }
    }
    Ok(out)
}

fn triple(start: usize, k: usize) -> Vec<usize> {
    (0..3).map(|j| wrap((start + j) as i64, 2 * k)).collect()
}

/// The vertex-separator of a vertex: the Mandelstam of its native external
/// 4-arc, promoted through the remaining Arcs.
pub fn vertex_separator(seq: &ArcSequence, vertex: usize) -> Result<Expr, BcfwError> {
    let (step, pos) = seq.vertex_step(vertex)?;
    let s = seq.steps[step];
    let (mut expr, from) = match s.n {
        4 => {
            let k = step + 2;
            let start = if pos == 0 { s.l + 1 } else { s.l };
            (mandelstam_expr(&triple(start, k)), step + 1)
        }
        3 => {
            // native once the next Arc_4 turns it into a crossing of two 4-arcs
            let next = seq.steps.get(step + 1).filter(|x| x.n == 4).ok_or(BcfwError::NotNative(vertex))?;
            let k = step + 3;
            (mandelstam_expr(&triple(next.l + 2, k)), step + 2)
        }
        _ => return Err(BcfwError::NotNative(vertex)),
    };
    for (j, x) in seq.steps.iter().enumerate().skip(from) {
        expr = promote_scalar(&expr, x.n, x.l, j + 1)?;
    }
    Ok(expr)
}

/// `{sequence, involution, dimension, boundaries: [{vertex, involution, kind}]}` per cell.
pub fn catalog_json(k: usize) -> Result<Value, BcfwError> {
    let mut cells = Vec::new();
    for seq in enumerate_bcfw(k) {
        let bs = if k >= 2 { boundaries(&seq)? } else { Vec::new() };
        cells.push(json!({
            "sequence": seq.to_string(),
            "involution": seq.involution()?.to_string(),
            "dimension": seq.angle_count(),
            "boundaries": bs.iter().map(|b| json!({
                "vertex": b.vertex,
                "sequence": b.seq.to_string(),
                "involution": b.involution.to_string(),
                "kind": b.kind,
            })).collect::<Vec<_>>(),
        }));
    }
    Ok(Value::Array(cells))
}

/// Whether a sampled point passes η-isotropy and non-negativity.
pub fn is_member(c: &Matrix<f64>, tol: f64) -> bool {
    let iso = is_eta_isotropic(c, tol).unwrap_or(false);
    let Ok(p) = plucker_vector(c) else { return false };
    let top = p.values().fold(0.0f64, |a, v| a.max(v.abs()));
    let sign = p.values().find(|v| v.abs() > tol * top).map_or(1.0, |v| v.signum());
    iso && p.values().all(|v| sign * v >= -tol * top)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ampl::{vandermonde_lambda, TwistorTable};
    use crate::twistor_expr::Evaluator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn census() {
        let counts: Vec<usize> = (2..=6).map(|k| enumerate_bcfw(k).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 14]);
        for k in 3..=6 {
            for s in enumerate_bcfw(k) {
                assert!(s.is_bcfw());
                assert_eq!(s.angle_count(), 2 * k - 3);
            }
        }
        assert_eq!(enumerate_bcfw(3)[0].involution().unwrap(), Involution::top_cell(3));
    }

    #[test]
    fn reducedness_predicates_agree() {
        for k in 3..=5 {
            let mut words = vec![vec![]];
            for j in 1..k {
                let mut next = Vec::new();
                for w in &words {
                    for n in 2..=4 {
                        for l in 1..=2 * j {
                            let mut w2: Vec<(usize, usize)> = w.clone();
                            w2.push((n, l));
                            next.push(w2);
                        }
                    }
                }
                words = next;
            }
            for w in words {
                let s = ArcSequence::new(&w);
                assert_eq!(s.is_reduced(), s.interval_reduced(), "{s}");
            }
        }
    }

    #[test]
    fn parse_display() {
        let s: ArcSequence = "A2,1 A3,2 A4,2".parse().unwrap();
        assert_eq!(s, ArcSequence::new(&[(3, 2), (4, 2)]));
        assert_eq!(s.to_string(), "A2,1 A3,2 A4,2");
        assert_eq!("A3,2 A4,2".parse::<ArcSequence>().unwrap(), s);
        assert!("A5,2".parse::<ArcSequence>().is_err());
    }

    #[test]
    fn sampled_points_are_members_of_their_cell() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 3..=5 {
            for s in enumerate_bcfw(k) {
                let p = sample_cell_rng(&s, &mut rng).unwrap();
                assert!(is_member(&p.matrix, 1e-9));
                assert_eq!(involution_of_point(&p.matrix, 1e-9), Some(s.involution().unwrap()));
            }
        }
        let k3 = sample_cell(&enumerate_bcfw(3)[0], &vec![Angle::from_sinh(4.0 / 3.0); 3]).unwrap();
        assert!(plucker_vector(&k3.matrix).unwrap().values().all(|v| *v > 0.0));
        assert!(sample_cell(&enumerate_bcfw(3)[0], &vec![Angle::from_sinh(-1.0); 3]).is_err());
    }

    #[test]
    fn boundaries_k3_k4() {
        let s3 = &enumerate_bcfw(3)[0];
        let b3 = boundaries(s3).unwrap();
        assert_eq!(b3.len(), 3);
        assert!(b3.iter().all(|b| b.kind == BoundaryKind::External));
        let spider: Involution = "(16)(25)(38)(47)".parse().unwrap();
        for s in enumerate_bcfw(4) {
            let b = boundaries(&s).unwrap();
            assert_eq!(b.len(), 5);
            let internal: Vec<_> = b.iter().filter(|x| x.kind == BoundaryKind::Internal).collect();
            assert_eq!(internal.len(), 1);
            assert_eq!(internal[0].involution, spider);
        }
        let t = boundary_triplets(4).unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn boundary_limits_match_boundary_sequences() {
        for k in 3..=6 {
            for s in enumerate_bcfw(k) {
                let bs = boundaries(&s).unwrap();
                assert_eq!(bs.len(), 2 * k - 3);
                for b in bs {
                    assert!(b.seq.is_reduced());
                    assert_eq!(b.seq.angle_count(), 2 * k - 4);
                    assert_eq!(b.seq.involution().unwrap(), b.involution);
                    let c = limit_point::<Dd>(&s, b.vertex, b.limit).unwrap().unwrap();
                    assert_eq!(involution_of_point(&c, 1e-20).as_ref(), Some(&b.involution));
                }
            }
        }
        let counts: Vec<usize> = (4..=6).map(|k| boundary_triplets(k).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 5, 21]);
    }

    #[test]
    fn approaching_a_vertex_limit_converges() {
        for k in 3..=4 {
            for s in enumerate_bcfw(k) {
                for b in boundaries(&s).unwrap() {
                    let mut a = probe_angles(s.angle_count());
                    a[b.vertex - 1] = Angle::from_sinh(if b.limit == Limit::Zero { 1e-12 } else { 1e12 });
                    let c = cell_matrix::<Dd>(&s, &a).unwrap();
                    assert_eq!(involution_of_point(&c, 1e-7).as_ref(), Some(&b.involution), "{s} v{}", b.vertex);
                }
            }
        }
    }

    #[test]
    fn peeling_recovers_every_bcfw_word() {
        for k in 2..=5 {
            for s in enumerate_bcfw(k) {
                let words = arc_sequences_for(&s.involution().unwrap());
                assert!(words.contains(&s));
                assert!(words.iter().all(|w| w.is_reduced() && w.involution().unwrap() == s.involution().unwrap()));
            }
        }
    }

    #[test]
    fn separators_vanish_on_their_boundary() {
        for k in 3..=5 {
            let nodes: Vec<f64> = (0..2 * k).map(|i| 0.6 + 0.15 * i as f64).collect();
            let lam = vandermonde_lambda(k, Some(&nodes)).unwrap().entries;
            for s in enumerate_bcfw(k) {
                for b in boundaries(&s).unwrap() {
                    let sep = vertex_separator(&s, b.vertex).unwrap();
                    let c = cell_matrix::<Dd>(&b.seq, &probe_angles(b.seq.angle_count())).unwrap();
                    let l = lam.map(|x| Dd::from(*x));
                    let t = TwistorTable::new(&c.mul(&l).unwrap(), &l).unwrap();
                    let (v, mag) = Evaluator::new(&t).eval_mag(&sep).unwrap();
                    // radicands vanishing on the wall turn roundoff ε into √ε
                    assert!(v.to_f64().abs() <= 1e-12 * mag, "{s} v{} {v} vs {mag}", b.vertex);
                }
            }
        }
    }

    #[test]
    fn reduce_rewrites_arc4_on_a_short_arc() {
        // after Arc_{2,2} at k=2 the pair {2,3} is an arc
        let s = ArcSequence::new(&[(2, 2), (4, 2)]);
        assert!(!s.is_reduced());
        let r = s.reduce();
        assert_eq!(r, ArcSequence::new(&[(2, 2), (3, 2)]));
        assert!(r.is_reduced());
    }
}
