//! Double-double floats (about 106 bits of mantissa) for evaluating the
//! inverse-map expressions, whose promoted forms cancel heavily.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde_json::Value;

use crate::exactmat::Scalar;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn norm(hi: f64, lo: f64) -> Self {
        let (h, l) = quick_two_sum(hi, lo);
        Dd { hi: h, lo: l }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite()
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { Dd::ZERO } else { Dd::new(f64::NAN) };
        }
        let x = self.hi.sqrt();
        let xx = Dd::new(x) * Dd::new(x);
        let corr = (self - xx).hi / (2.0 * x);
        Dd::norm(x, corr)
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        Dd::norm(p, e + self.lo * b)
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::norm(s, e + f)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        Dd::norm(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        Dd { hi: q1, lo: q2 } + Dd::new(q3)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, b: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&b.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&b.lo),
            o => Some(o),
        }
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}{:+e}", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

impl Scalar for Dd {
    const EXACT: bool = false;
    fn zero() -> Self {
        Dd::ZERO
    }
    fn one() -> Self {
        Dd::ONE
    }
    fn from_i64(v: i64) -> Self {
        let hi = v as f64;
        Dd::norm(hi, (v - hi as i64) as f64)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }
    fn to_f64(&self) -> f64 {
        Dd::to_f64(*self)
    }
    fn is_zero_tol(&self, tol: f64) -> bool {
        Dd::to_f64(*self).abs() <= tol
    }
    fn abs(&self) -> Self {
        Dd::abs(*self)
    }
    fn to_json(&self) -> Value {
        serde_json::json!([self.hi, self.lo])
    }
    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::Array(a) if a.len() == 2 => Some(Dd::norm(a[0].as_f64()?, a[1].as_f64()?)),
            _ => f64::from_json(v).map(Dd::new),
        }
    }
    fn det_in_place(mut a: Vec<Dd>, n: usize) -> Dd {
        let mut det = Dd::ONE;
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
            if best.hi == 0.0 {
                return Dd::ZERO;
            }
            if p != c {
                for j in 0..n {
                    a.swap(c * n + j, p * n + j);
                }
                det = -det;
            }
            let piv = a[c * n + c];
            det = det * piv;
            for r in c + 1..n {
                let f = a[r * n + c] / piv;
                for j in c + 1..n {
                    a[r * n + j] = a[r * n + j] - f * a[c * n + j];
                }
            }
        }
        det
    }
}

/// Ordered floating scalars with a square root: `f64` and [`Dd`].
pub trait Real: Scalar + Copy + PartialOrd {
    /// unit roundoff
    const EPSILON: f64;
    fn from_f64(x: f64) -> Self;
    fn sqrt(self) -> Self;
    fn is_finite(self) -> bool;
}

impl Real for f64 {
    const EPSILON: f64 = f64::EPSILON;
    fn from_f64(x: f64) -> Self {
        x
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Real for Dd {
    const EPSILON: f64 = 4.93e-32;
    fn from_f64(x: f64) -> Self {
        Dd::new(x)
    }
    fn sqrt(self) -> Self {
        Dd::sqrt(self)
    }
    fn is_finite(self) -> bool {
        Dd::is_finite(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn resolves_below_f64() {
        let tiny = Dd::new(1e-20);
        let x = (Dd::ONE + tiny) - Dd::ONE;
        assert!((x.to_f64() - 1e-20).abs() < 1e-35);
        let third = Dd::ONE / Dd::new(3.0);
        let r = third * Dd::new(3.0) - Dd::ONE;
        assert!(r.to_f64().abs() < 1e-31);
        let s = Dd::new(2.0).sqrt();
        assert!((s * s - Dd::new(2.0)).to_f64().abs() < 1e-31);
    }

    #[test]
    fn determinant() {
        let a: Vec<Dd> = [2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0].iter().map(|&x| Dd::new(x)).collect();
        assert_eq!(Dd::det_in_place(a, 3).to_f64(), 18.0);
    }

    proptest! {
        #[test]
        fn field_identities(a in -1e3f64..1e3, b in 0.1f64..1e3, c in -1e3f64..1e3) {
            let (x, y, z) = (Dd::new(a), Dd::new(b), Dd::new(c));
            let d = (x + y) * z - (x * z + y * z);
            prop_assert!(d.to_f64().abs() <= 1e-28 * (a.abs() + b) * c.abs().max(1.0));
            let q = (x / y) * y - x;
            prop_assert!(q.to_f64().abs() <= 1e-29 * a.abs().max(1.0));
        }
    }
}
