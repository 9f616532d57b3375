//! Fixed-point-free involutions on `[2k]`, their arcs, crossings and supports.
//!
//! Labels are 1-based throughout.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InvolutionError {
    #[error("label {0} is outside [1, {1}]")]
    OutOfRange(usize, usize),
    #[error("label {0} is used twice")]
    Repeated(usize),
    #[error("label {0} is a fixed point")]
    FixedPoint(usize),
    #[error("not an involution: {0}")]
    NotInvolution(String),
    #[error("arc {{{0},{1}}} is not an arc of the involution")]
    ForeignArc(usize, usize),
    #[error("cannot parse involution: {0}")]
    Parse(String),
}

/// Reduces a possibly out-of-range integer label into `[1, n]`.
pub fn wrap(i: i64, n: usize) -> usize {
    let n = n as i64;
    ((i - 1).rem_euclid(n) + 1) as usize
}

/// The cyclic interval `from, from+1, ..., to` (inclusive) in `[n]`.
pub fn cyclic_interval(from: usize, to: usize, n: usize) -> Vec<usize> {
    let mut out = vec![from];
    let mut cur = from;
    while cur != to {
        cur = wrap(cur as i64 + 1, n);
        out.push(cur);
    }
    out
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Involution {
    /// `map[i-1] = τ(i)`
    map: Vec<usize>,
}

/// An arc `{a, b}` with `a < b`; `support` is set when it was found external.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Arc {
    pub a: usize,
    pub b: usize,
    pub support: Option<Vec<usize>>,
}

impl Arc {
    pub fn new(x: usize, y: usize) -> Self {
        Arc { a: x.min(y), b: x.max(y), support: None }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.a == i || self.b == i
    }
}

impl Involution {
    pub fn from_map(map: Vec<usize>) -> Result<Self, InvolutionError> {
        let n = map.len();
        if n % 2 == 1 {
            return Err(InvolutionError::NotInvolution(format!("odd size {n}")));
        }
        for (idx, &t) in map.iter().enumerate() {
            let i = idx + 1;
            if t == 0 || t > n {
                return Err(InvolutionError::OutOfRange(t, n));
            }
            if t == i {
                return Err(InvolutionError::FixedPoint(i));
            }
            if map[t - 1] != i {
                return Err(InvolutionError::NotInvolution(format!("τ({i})={t} but τ({t})={}", map[t - 1])));
            }
        }
        Ok(Involution { map })
    }

    /// From 2-cycles covering `[2k]` exactly once.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self, InvolutionError> {
        let n = pairs.len() * 2;
        let mut map = vec![0; n];
        for &(x, y) in pairs {
            for v in [x, y] {
                if v == 0 || v > n {
                    return Err(InvolutionError::OutOfRange(v, n));
                }
            }
            if x == y {
                return Err(InvolutionError::FixedPoint(x));
            }
            for (u, v) in [(x, y), (y, x)] {
                if map[u - 1] != 0 {
                    return Err(InvolutionError::Repeated(u));
                }
                map[u - 1] = v;
            }
        }
        Self::from_map(map)
    }

    /// The empty involution on `[0]`.
    pub fn empty() -> Self {
        Involution { map: Vec::new() }
    }

    pub fn k(&self) -> usize {
        self.map.len() / 2
    }

    pub fn n(&self) -> usize {
        self.map.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i - 1]
    }

    pub fn as_map(&self) -> &[usize] {
        &self.map
    }

    /// Sorted pairs `(a, b)` with `a < b`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (1..=self.n()).filter(|&i| i < self.apply(i)).map(|i| (i, self.apply(i))).collect()
    }

    pub fn arcs(&self) -> Vec<Arc> {
        self.pairs().into_iter().map(|(a, b)| Arc::new(a, b)).collect()
    }

    pub fn has_arc(&self, a: &Arc) -> bool {
        a.a >= 1 && a.b <= self.n() && self.apply(a.a) == a.b
    }

    fn own(&self, a: &Arc) -> Result<(), InvolutionError> {
        if self.has_arc(a) {
            Ok(())
        } else {
            Err(InvolutionError::ForeignArc(a.a, a.b))
        }
    }

    /// Whether two arcs of `self` interleave cyclically.
    pub fn crossing(&self, x: &Arc, y: &Arc) -> Result<bool, InvolutionError> {
        self.own(x)?;
        self.own(y)?;
        Ok(arcs_cross((x.a, x.b), (y.a, y.b)))
    }

    pub fn crossing_number(&self) -> usize {
        let p = self.pairs();
        let mut c = 0;
        for (i, &x) in p.iter().enumerate() {
            c += p[i + 1..].iter().filter(|&&y| arcs_cross(x, y)).count();
        }
        c
    }

    /// Whether some arc has both endpoints in `set`.
    pub fn contains_arc(&self, set: &[usize]) -> bool {
        set.iter().any(|&i| i >= 1 && i <= self.n() && set.contains(&self.apply(i)))
    }

    /// The arc through `l` together with an arc-free support, if one exists.
    /// When both cyclic intervals qualify the one running upward from `l` wins.
    pub fn external_arc(&self, l: usize) -> Option<Arc> {
        if l == 0 || l > self.n() {
            return None;
        }
        let m = self.apply(l);
        let n = self.n();
        for (from, to) in [(l, m), (m, l)] {
            let interval = cyclic_interval(from, to, n);
            let other = interval
                .iter()
                .any(|&i| i != l && i != m && interval.contains(&self.apply(i)));
            if !other {
                let mut arc = Arc::new(l, m);
                arc.support = Some(interval);
                return Some(arc);
            }
        }
        None
    }

    /// `τ(i) = i + k mod 2k`.
    pub fn top_cell(k: usize) -> Self {
        let n = 2 * k;
        Involution { map: (1..=n).map(|i| wrap((i + k) as i64, n)).collect() }
    }

    /// All fixed-point-free involutions of `[2k]`, lexicographic in the map.
    pub fn all(k: usize) -> Vec<Involution> {
        fn rec(map: &mut Vec<usize>, out: &mut Vec<Involution>) {
            let Some(first) = map.iter().position(|&v| v == 0) else {
                out.push(Involution { map: map.clone() });
                return;
            };
            for j in first + 1..map.len() {
                if map[j] == 0 {
                    map[first] = j + 1;
                    map[j] = first + 1;
                    rec(map, out);
                    map[first] = 0;
                    map[j] = 0;
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut vec![0; 2 * k], &mut out);
        out
    }

    /// Conjugation by the transposition `(x y)`.
    pub fn conjugate_transposition(&self, x: usize, y: usize) -> Self {
        let swap = |i: usize| if i == x { y } else if i == y { x } else { i };
        let mut map = vec![0; self.n()];
        for i in 1..=self.n() {
            map[swap(i) - 1] = swap(self.apply(i));
        }
        Involution { map }
    }

    /// Grassmann necklace `I_1, ..., I_n` of the positroid cell containing
    /// this orthitroid cell.
    pub fn necklace(&self) -> Vec<Vec<usize>> {
        let n = self.n() as i64;
        // bounded affine permutation i < f(i) <= i + n
        let f = |j: i64| -> i64 {
            let r = wrap(j, n as usize);
            let t = self.apply(r) as i64;
            let base = j - r as i64;
            base + if t > r as i64 { t } else { t + n }
        };
        (1..=n)
            .map(|i| {
                let mut set: Vec<usize> = (i - n..i).filter(|&j| f(j) >= i).map(|j| wrap(f(j), n as usize)).collect();
                set.sort_unstable();
                set
            })
            .collect()
    }

    /// Whether `Δ_set` is nonzero on the cell (Gale order against the necklace).
    pub fn is_basis(&self, set: &[usize]) -> bool {
        let n = self.n();
        self.necklace().iter().enumerate().all(|(i, neck)| gale_leq(neck, set, i + 1, n))
    }

    /// Nonzero pattern over all `k`-subsets in lexicographic order.
    pub fn basis_pattern(&self) -> Vec<bool> {
        let n = self.n();
        let neck = self.necklace();
        itertools::Itertools::combinations(1..=n, self.k())
            .map(|set| neck.iter().enumerate().all(|(i, nk)| gale_leq(nk, &set, i + 1, n)))
            .collect()
    }

    /// `τ'(i+1) = τ(i) + 1` mod `2k`.
    pub fn cyclic_shift(&self) -> Self {
        let n = self.n();
        let mut map = vec![0; n];
        for i in 1..=n {
            map[wrap(i as i64 + 1, n) - 1] = wrap(self.apply(i) as i64 + 1, n);
        }
        Involution { map }
    }
}

/// `a ≤_i b` in the Gale order for the cyclic order starting at `i`.
fn gale_leq(a: &[usize], b: &[usize], i: usize, n: usize) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let key = |x: &usize| (x + n - i) % n;
    let mut a: Vec<usize> = a.iter().map(key).collect();
    let mut b: Vec<usize> = b.iter().map(key).collect();
    a.sort_unstable();
    b.sort_unstable();
    a.iter().zip(&b).all(|(x, y)| x <= y)
}

fn arcs_cross(x: (usize, usize), y: (usize, usize)) -> bool {
    let (a1, a2) = (x.0.min(x.1), x.0.max(x.1));
    let (b1, b2) = (y.0.min(y.1), y.0.max(y.1));
    (a1 < b1 && b1 < a2 && a2 < b2) || (b1 < a1 && a1 < b2 && b2 < a2)
}

impl fmt::Display for Involution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n() == 0 {
            return write!(f, "()");
        }
        let wide = self.n() > 9;
        for (a, b) in self.pairs() {
            if wide {
                write!(f, "({a} {b})")?;
            } else {
                write!(f, "({a}{b})")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Involution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Involution{self}")
    }
}

/// Accepts cycle notation `(14)(25)(36)` / `(1 10)(2 3)...` or a JSON pair list.
impl FromStr for Involution {
    type Err = InvolutionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.starts_with('[') {
            let pairs: Vec<(usize, usize)> =
                serde_json::from_str(s).map_err(|e| InvolutionError::Parse(e.to_string()))?;
            return Self::from_pairs(&pairs);
        }
        if s == "()" {
            return Ok(Self::empty());
        }
        let mut pairs = Vec::new();
        for chunk in s.split(')').map(str::trim).filter(|c| !c.is_empty()) {
            let body = chunk
                .strip_prefix('(')
                .ok_or_else(|| InvolutionError::Parse(format!("expected '(' in {chunk:?}")))?;
            let nums: Vec<usize> = if body.contains([' ', ',']) {
                body.split([' ', ','])
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse().map_err(|_| InvolutionError::Parse(t.to_string())))
                    .collect::<Result<_, _>>()?
            } else {
                body.chars()
                    .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(|| InvolutionError::Parse(body.to_string())))
                    .collect::<Result<_, _>>()?
            };
            match nums.as_slice() {
                [a, b] => pairs.push((*a, *b)),
                _ => return Err(InvolutionError::Parse(format!("cycle {chunk:?} is not a pair"))),
            }
        }
        Self::from_pairs(&pairs)
    }
}

impl Serialize for Involution {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.pairs().iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Involution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let pairs: Vec<(usize, usize)> = Vec::deserialize(d)?;
        Involution::from_pairs(&pairs).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inv(s: &str) -> Involution {
        s.parse().unwrap()
    }

    #[test]
    fn crossing_examples() {
        let t = inv("(13)(24)");
        assert!(t.crossing(&Arc::new(1, 3), &Arc::new(2, 4)).unwrap());
        let t = inv("(12)(34)");
        assert!(!t.crossing(&Arc::new(1, 2), &Arc::new(3, 4)).unwrap());
        assert_eq!(t.crossing(&Arc::new(1, 3), &Arc::new(2, 4)), Err(InvolutionError::ForeignArc(1, 3)));
        assert_eq!(Involution::top_cell(3).crossing_number(), 3);
    }

    #[test]
    fn external_arc_examples() {
        let t = inv("(14)(26)(35)");
        assert_eq!(t.external_arc(1).unwrap().support, Some(vec![1, 2, 3, 4]));
        let t = inv("(13)(24)");
        assert_eq!(t.external_arc(1).unwrap().support, Some(vec![1, 2, 3]));
        let t = inv("(16)(23)(45)");
        assert_eq!(t.external_arc(1).unwrap().support, Some(vec![6, 1]));
        assert_eq!(inv("(12)(36)(45)").external_arc(3), None);
    }

    #[test]
    fn top_cell_arcs_have_length_k_plus_one_supports() {
        // Each interval i..i+k holds only i's arc whole, so every arc is external.
        for k in 3..6 {
            let t = Involution::top_cell(k);
            for i in 1..=2 * k {
                assert_eq!(t.external_arc(i).unwrap().support.unwrap().len(), k + 1);
            }
        }
    }

    #[test]
    fn contains_arc_examples() {
        assert!(inv("(12)(34)").contains_arc(&[1, 2]));
        assert!(!inv("(13)(24)").contains_arc(&[1, 2]));
        // {3,5} is an arc, so the interval 2..5 does hold one
        assert!(inv("(14)(26)(35)").contains_arc(&[2, 3, 4, 5]));
        assert!(!inv("(14)(26)(35)").contains_arc(&[2, 3, 4]));
    }

    #[test]
    fn top_cells() {
        assert_eq!(Involution::top_cell(1), inv("(12)"));
        assert_eq!(Involution::top_cell(3), inv("(14)(25)(36)"));
        assert_eq!(Involution::top_cell(4), inv("(15)(26)(37)(48)"));
        assert_eq!(Involution::top_cell(4).cyclic_shift(), Involution::top_cell(4));
    }

    #[test]
    fn parse_and_serialize() {
        let t = inv("[[1,4],[2,6],[3,5]]");
        assert_eq!(t.to_string(), "(14)(26)(35)");
        assert_eq!(serde_json::to_string(&t).unwrap(), "[[1,4],[2,6],[3,5]]");
        let wide = Involution::top_cell(5);
        assert_eq!(wide.to_string(), "(1 6)(2 7)(3 8)(4 9)(5 10)");
        assert_eq!(inv(&wide.to_string()), wide);
        assert!("(11)".parse::<Involution>().is_err());
        assert!("(12)(23)".parse::<Involution>().is_err());
    }

    #[test]
    fn counts_are_double_factorials() {
        assert_eq!(Involution::all(2).len(), 3);
        assert_eq!(Involution::all(3).len(), 15);
        assert_eq!(Involution::all(4).len(), 105);
    }

    fn any_involution() -> impl Strategy<Value = Involution> {
        (1usize..=5).prop_flat_map(|k| {
            let all = Involution::all(k);
            (0..all.len()).prop_map(move |i| all[i].clone())
        })
    }

    proptest! {
        #[test]
        fn crossing_is_symmetric(t in any_involution()) {
            for x in t.arcs() {
                for y in t.arcs() {
                    prop_assert_eq!(t.crossing(&x, &y).unwrap(), t.crossing(&y, &x).unwrap());
                }
                prop_assert!(!t.crossing(&x, &x).unwrap());
            }
        }

        #[test]
        fn support_interior_pairs_outside(t in any_involution()) {
            for l in 1..=t.n() {
                if let Some(arc) = t.external_arc(l) {
                    let sup = arc.support.unwrap();
                    let crossing_out = t.arcs().iter()
                        .filter(|a| **a != Arc::new(l, t.apply(l)))
                        .filter(|a| sup.contains(&a.a) != sup.contains(&a.b))
                        .count();
                    prop_assert_eq!(crossing_out, sup.len() - 2);
                }
            }
        }

        #[test]
        fn cyclic_shift_has_period_2k(t in any_involution()) {
            let mut s = t.clone();
            for _ in 0..t.n() { s = s.cyclic_shift(); }
            prop_assert_eq!(s, t.clone());
            prop_assert_eq!(t.cyclic_shift().crossing_number(), t.crossing_number());
        }
    }

    #[test]
    fn necklace_patterns() {
        assert!(Involution::top_cell(3).basis_pattern().iter().all(|&b| b));
        let t: Involution = "(12)(34)".parse().unwrap();
        // subsets 12 13 14 23 24 34
        assert_eq!(t.basis_pattern(), vec![false, true, true, true, true, false]);
        assert!(t.necklace().iter().all(|s| s.len() == 2));
    }
}
