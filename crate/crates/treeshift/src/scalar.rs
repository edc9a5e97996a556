//! Exact-or-floating scalars and the extended half line.
//!
//! Every quantity in the moment pipeline is a [`Scalar`]: an exact
//! `BigRational` as long as every operand is exact, degrading to `f64` the
//! moment a float enters an expression. Integrals of `1/s` against mass at
//! zero produce the distinguished value `+inf`, carried by [`ExtReal`].

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

/// A nonnegative-or-signed scalar, exact rational or floating.
#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact rational `numer/denom`. Panics if `denom == 0`.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Scalar::Exact(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_f64(x: f64) -> Self {
        Scalar::Float(x)
    }

    /// Parses "p/q" or "p" as exact; anything else via f64.
    pub fn parse(s: &str) -> Result<Self, String> {
        let t = s.trim();
        if let Ok(r) = BigRational::from_str(t) {
            return Ok(Scalar::Exact(r));
        }
        if let Ok(n) = BigInt::from_str(t) {
            return Ok(Scalar::Exact(BigRational::from_integer(n)));
        }
        t.parse::<f64>()
            .map(Scalar::Float)
            .map_err(|_| format!("cannot parse scalar from {t:?}"))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::Float(x) => *x,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Float(x) => *x == 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_positive(),
            Scalar::Float(x) => *x > 0.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_negative(),
            Scalar::Float(x) => *x < 0.0,
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.abs()),
            Scalar::Float(x) => Scalar::Float(x.abs()),
        }
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn recip(&self) -> Scalar {
        assert!(!self.is_zero(), "reciprocal of zero");
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.recip()),
            Scalar::Float(x) => Scalar::Float(1.0 / x),
        }
    }

    /// Integer power. `0^0 = 1`; a negative exponent on zero panics, so
    /// callers must handle mass at zero before raising to negative powers.
    pub fn powi(&self, exp: i32) -> Scalar {
        if exp == 0 {
            return Scalar::one();
        }
        if self.is_zero() {
            assert!(exp > 0, "negative power of zero");
            return Scalar::zero();
        }
        match self {
            Scalar::Exact(r) => {
                let p = num::pow::pow(r.clone(), exp.unsigned_abs() as usize);
                if exp < 0 {
                    Scalar::Exact(p.recip())
                } else {
                    Scalar::Exact(p)
                }
            }
            Scalar::Float(x) => Scalar::Float(x.powi(exp)),
        }
    }

    /// Square root: exact when the rational is a perfect square, floating
    /// otherwise. Panics on negatives.
    pub fn sqrt(&self) -> Scalar {
        assert!(!self.is_negative(), "sqrt of negative scalar");
        match self {
            Scalar::Exact(r) => match exact_sqrt(r) {
                Some(root) => Scalar::Exact(root),
                None => Scalar::Float(self.to_f64().sqrt()),
            },
            Scalar::Float(x) => Scalar::Float(x.sqrt()),
        }
    }

    pub fn ln_f64(&self) -> f64 {
        self.to_f64().ln()
    }

    pub fn min(self, other: Scalar) -> Scalar {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Scalar) -> Scalar {
        if other > self {
            other
        } else {
            self
        }
    }

    /// |self - other| <= tol, exact equality when both operands are exact.
    pub fn close_to(&self, other: &Scalar, tol: f64) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => {
                if tol == 0.0 {
                    a == b
                } else {
                    (a - b).abs().to_f64().unwrap_or(f64::INFINITY) <= tol
                }
            }
            _ => (self.to_f64() - other.to_f64()).abs() <= tol,
        }
    }
}

/// Floor square root with perfect-square detection on rationals.
pub fn exact_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer();
    let d = r.denom();
    let sn = n.sqrt();
    let sd = d.sqrt();
    if &(&sn * &sn) == n && &(&sd * &sd) == d {
        Some(BigRational::new(sn, sd))
    } else {
        None
    }
}

fn binop(a: &Scalar, b: &Scalar, exact: impl Fn(&BigRational, &BigRational) -> BigRational, float: impl Fn(f64, f64) -> f64) -> Scalar {
    match (a, b) {
        (Scalar::Exact(x), Scalar::Exact(y)) => Scalar::Exact(exact(x, y)),
        _ => Scalar::Float(float(a.to_f64(), b.to_f64())),
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                binop(self, rhs, |a, b| a $op b, |a, b| a $op b)
            }
        }
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
        impl $trait<Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                self.$method(&rhs)
            }
        }
    };
}

impl_binop!(Add, add, +);
impl_binop!(Sub, sub, -);
impl_binop!(Mul, mul, *);

impl Div for &Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        assert!(!rhs.is_zero(), "scalar division by zero");
        binop(self, rhs, |a, b| a / b, |a, b| a / b)
    }
}
impl Div for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        &self / &rhs
    }
}
impl Div<&Scalar> for Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        &self / rhs
    }
}
impl Div<Scalar> for &Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        self / &rhs
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(-r),
            Scalar::Float(x) => Scalar::Float(-x),
        }
    }
}
impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.partial_cmp(b),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Float(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(_) => serializer.serialize_str(&self.to_string()),
            Scalar::Float(x) => serializer.serialize_f64(*x),
        }
    }
}

struct ScalarVisitor;

impl Visitor<'_> for ScalarVisitor {
    type Value = Scalar;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or a rational string like \"2/3\"")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Scalar, E> {
        Ok(Scalar::from_int(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Scalar, E> {
        Ok(Scalar::Exact(BigRational::from_integer(BigInt::from(v))))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Scalar, E> {
        Ok(Scalar::Float(v))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Scalar, E> {
        Scalar::parse(v).map_err(de::Error::custom)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Scalar, D::Error> {
        deserializer.deserialize_any(ScalarVisitor)
    }
}

/// A nonnegative scalar or `+inf`, with the conventions `1/0 = inf` and
/// `0 * inf = 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum ExtReal {
    Finite(Scalar),
    Infinite,
}

impl ExtReal {
    pub fn zero() -> Self {
        ExtReal::Finite(Scalar::zero())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtReal::Infinite)
    }

    pub fn finite(&self) -> Option<&Scalar> {
        match self {
            ExtReal::Finite(s) => Some(s),
            ExtReal::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtReal::Finite(s) => s.to_f64(),
            ExtReal::Infinite => f64::INFINITY,
        }
    }

    pub fn add(&self, other: &ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::Infinite,
        }
    }

    /// `c * self` with the convention `0 * inf = 0`.
    pub fn scale(&self, c: &Scalar) -> ExtReal {
        if c.is_zero() {
            return ExtReal::zero();
        }
        match self {
            ExtReal::Finite(s) => ExtReal::Finite(c * s),
            ExtReal::Infinite => ExtReal::Infinite,
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        match (&self, &other) {
            (ExtReal::Infinite, _) | (_, ExtReal::Infinite) => ExtReal::Infinite,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => {
                if b > a {
                    other
                } else {
                    self
                }
            }
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::Infinite, ExtReal::Infinite) => Some(Ordering::Equal),
            (ExtReal::Infinite, ExtReal::Finite(_)) => Some(Ordering::Greater),
            (ExtReal::Finite(_), ExtReal::Infinite) => Some(Ordering::Less),
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl PartialOrd<Scalar> for ExtReal {
    fn partial_cmp(&self, other: &Scalar) -> Option<Ordering> {
        match self {
            ExtReal::Infinite => Some(Ordering::Greater),
            ExtReal::Finite(a) => a.partial_cmp(other),
        }
    }
}

impl PartialEq<Scalar> for ExtReal {
    fn eq(&self, other: &Scalar) -> bool {
        matches!(self, ExtReal::Finite(a) if a == other)
    }
}

impl From<Scalar> for ExtReal {
    fn from(s: Scalar) -> Self {
        ExtReal::Finite(s)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(s) => write!(f, "{s}"),
            ExtReal::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(s) => s.serialize(serializer),
            ExtReal::Infinite => serializer.serialize_str("inf"),
        }
    }
}

/// A complex value in polar form: exact modulus squared plus floating phase.
///
/// Weight-path products and the inner products of shifted basis vectors are
/// always single terms of this shape, so the modulus side of every formula
/// stays rational.
#[derive(Clone, Debug, Serialize)]
pub struct PolarScalar {
    pub modsq: Scalar,
    pub phase: f64,
}

impl PolarScalar {
    pub fn zero() -> Self {
        PolarScalar { modsq: Scalar::zero(), phase: 0.0 }
    }

    pub fn one() -> Self {
        PolarScalar { modsq: Scalar::one(), phase: 0.0 }
    }

    pub fn real(modsq: Scalar) -> Self {
        PolarScalar { modsq, phase: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.modsq.is_zero()
    }

    pub fn conj(&self) -> Self {
        PolarScalar { modsq: self.modsq.clone(), phase: -self.phase }
    }

    pub fn mul(&self, other: &PolarScalar) -> Self {
        if self.is_zero() || other.is_zero() {
            return PolarScalar::zero();
        }
        PolarScalar {
            modsq: &self.modsq * &other.modsq,
            phase: self.phase + other.phase,
        }
    }

    /// Multiply by a nonnegative real scalar.
    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() || self.is_zero() {
            return PolarScalar::zero();
        }
        PolarScalar {
            modsq: &self.modsq * &(c * c),
            phase: self.phase,
        }
    }

    pub fn modulus_f64(&self) -> f64 {
        self.modsq.to_f64().sqrt()
    }

    pub fn re_im(&self) -> (f64, f64) {
        let m = self.modulus_f64();
        (m * self.phase.cos(), m * self.phase.sin())
    }

    /// Complex distance |self - other| in f64, exact zero shortcut when the
    /// moduli squared agree exactly and the phases coincide.
    pub fn dist_f64(&self, other: &PolarScalar) -> f64 {
        if self.modsq == other.modsq && (self.is_zero() || self.phase == other.phase) {
            return 0.0;
        }
        let (ar, ai) = self.re_im();
        let (br, bi) = other.re_im();
        ((ar - br).powi(2) + (ai - bi).powi(2)).sqrt()
    }
}
