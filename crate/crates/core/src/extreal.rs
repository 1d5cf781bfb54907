//! Extended-real scalar arithmetic.
//!
//! `ExtReal` is the scalar type used everywhere in this crate: the reals
//! extended by `-inf` and `+inf` under a totally ordered, total arithmetic
//! with two deliberate conventions:
//!
//! * `inf - inf = -inf + inf = -inf` (addition of opposite infinities
//!   resolves downward), and
//! * `0 * (+-inf) = 0` (zero annihilates infinities).
//!
//! A consequence worth remembering: negation does not commute with
//! addition, `-(a + b) >= (-a) + (-b)`, strictly at `(+inf, -inf)`.
//!
//! No NaN state is representable. Constructors reject NaN and map IEEE
//! infinities to the matching variant; finite overflow saturates to the
//! corresponding infinity, which keeps every operation total and monotone.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

pub use ExtReal::{NegInf, PosInf};

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);
    pub const ONE: ExtReal = ExtReal::Finite(1.0);

    /// Wraps an `f64`. Panics on NaN; maps IEEE infinities to the
    /// corresponding variant.
    pub fn finite(x: f64) -> Self {
        assert!(!x.is_nan(), "ExtReal cannot represent NaN");
        if x == f64::INFINITY {
            PosInf
        } else if x == f64::NEG_INFINITY {
            NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_zero(self) -> bool {
        matches!(self, ExtReal::Finite(x) if x == 0.0)
    }

    /// Finite payload, if any.
    pub fn as_f64(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Lossy view: infinities become IEEE infinities.
    pub fn to_f64(self) -> f64 {
        match self {
            NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            PosInf => f64::INFINITY,
        }
    }

    /// Sum under the `inf - inf = -inf` convention: `-inf` absorbs.
    pub fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (NegInf, _) | (_, NegInf) => NegInf,
            (PosInf, _) | (_, PosInf) => PosInf,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => Self::finite(a + b),
        }
    }

    /// Product under the `0 * (+-inf) = 0` convention.
    pub fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return ExtReal::ZERO;
        }
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => Self::finite(a * b),
            _ => {
                let same_sign = self.is_positive() == rhs.is_positive();
                if same_sign {
                    PosInf
                } else {
                    NegInf
                }
            }
        }
    }

    pub fn neg(self) -> Self {
        match self {
            NegInf => PosInf,
            ExtReal::Finite(x) => ExtReal::Finite(-x),
            PosInf => NegInf,
        }
    }

    /// `self + (-rhs)`; in particular `inf - inf = -inf`.
    pub fn sub(self, rhs: Self) -> Self {
        self.add(rhs.neg())
    }

    /// `max(self, 0)`.
    pub fn pos_part(self) -> Self {
        self.max(ExtReal::ZERO)
    }

    /// `max(-self, 0)`.
    pub fn neg_part(self) -> Self {
        self.neg().max(ExtReal::ZERO)
    }

    fn is_positive(self) -> bool {
        self > ExtReal::ZERO
    }

    /// `self >= rhs - eps`, with infinities compared exactly.
    pub fn ge_within(self, rhs: Self, eps: f64) -> bool {
        match rhs {
            NegInf => true,
            PosInf => matches!(self, PosInf),
            ExtReal::Finite(b) => match self {
                PosInf => true,
                NegInf => false,
                ExtReal::Finite(a) => a >= b - eps,
            },
        }
    }

    /// `self <= rhs + eps`, with infinities compared exactly.
    pub fn le_within(self, rhs: Self, eps: f64) -> bool {
        rhs.ge_within(self, eps)
    }

    /// Equality up to `eps` on finite values; infinities must match.
    pub fn approx_eq(self, rhs: Self, eps: f64) -> bool {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs() <= eps,
            _ => self == rhs,
        }
    }

    /// How far `self >= rhs` is violated: positive when it fails, `+inf`
    /// when `rhs = +inf` exceeds a non-infinite `self`.
    pub fn shortfall(self, rhs: Self) -> f64 {
        match (self, rhs) {
            (PosInf, _) | (_, NegInf) => f64::NEG_INFINITY,
            (NegInf, _) => f64::INFINITY,
            (_, PosInf) => f64::INFINITY,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => b - a,
        }
    }
}

impl PartialEq for ExtReal {
    fn eq(&self, other: &Self) -> bool {
        matches!(self.cmp(other), Ordering::Equal)
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) => Ordering::Less,
            (_, NegInf) => Ordering::Greater,
            (PosInf, _) => Ordering::Greater,
            (_, PosInf) => Ordering::Less,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => {
                a.partial_cmp(b).expect("ExtReal holds no NaN")
            }
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        Self::finite(x)
    }
}

impl From<i32> for ExtReal {
    fn from(x: i32) -> Self {
        ExtReal::Finite(f64::from(x))
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: Self) -> Self {
        ExtReal::add(self, rhs)
    }
}

impl Sub for ExtReal {
    type Output = ExtReal;
    fn sub(self, rhs: Self) -> Self {
        ExtReal::sub(self, rhs)
    }
}

impl Mul for ExtReal {
    type Output = ExtReal;
    fn mul(self, rhs: Self) -> Self {
        ExtReal::mul(self, rhs)
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> Self {
        ExtReal::neg(self)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NegInf => write!(f, "-inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
            PosInf => write!(f, "inf"),
        }
    }
}

// JSON form: plain number, or the strings "inf" / "-inf".
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NegInf => ser.serialize_str("-inf"),
            ExtReal::Finite(x) => ser.serialize_f64(*x),
            PosInf => ser.serialize_str("inf"),
        }
    }
}

struct ExtRealVisitor;

impl Visitor<'_> for ExtRealVisitor {
    type Value = ExtReal;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a number or the string \"inf\" / \"-inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtReal, E> {
        if v.is_nan() {
            return Err(E::custom("NaN is not a valid extended real"));
        }
        Ok(ExtReal::finite(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtReal, E> {
        Ok(ExtReal::finite(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtReal, E> {
        Ok(ExtReal::finite(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtReal, E> {
        match v {
            "inf" | "+inf" => Ok(PosInf),
            "-inf" => Ok(NegInf),
            other => Err(E::custom(format!(
                "unrecognized extended real string {other:?}"
            ))),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        de.deserialize_any(ExtRealVisitor)
    }
}
