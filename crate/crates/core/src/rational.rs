//! Exact rational numbers with 64-bit storage.
//!
//! Arithmetic is carried out in 128-bit intermediates and reduced to lowest
//! terms before being narrowed back, so the only failure mode is a reduced
//! result that does not fit in 64 bits. The `checked_*` methods report that
//! as `None`; the operator impls panic, and are meant for building fixed
//! catalog kernels where overflow is a programming error.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("value does not fit in 64 bits")]
    Overflow,
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
}

/// A fraction `num / den` with `den > 0`, always in lowest terms.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: i64,
    den: i64,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    pub fn new(num: i64, den: i64) -> Result<Self, RationalError> {
        Self::from_i128(num as i128, den as i128)
    }

    pub fn integer(n: i64) -> Self {
        Rational { num: n, den: 1 }
    }

    /// `2^{-k}`, exact for `k <= 62`.
    pub fn dyadic(k: u32) -> Result<Self, RationalError> {
        if k > 62 {
            return Err(RationalError::Overflow);
        }
        Ok(Rational {
            num: 1,
            den: 1i64 << k,
        })
    }

    fn from_i128(num: i128, den: i128) -> Result<Self, RationalError> {
        if den == 0 {
            return Err(RationalError::ZeroDenominator);
        }
        let (mut num, mut den) = if den < 0 { (-num, -den) } else { (num, den) };
        if num == 0 {
            return Ok(Self::ZERO);
        }
        let g = gcd(num.unsigned_abs(), den as u128) as i128;
        num /= g;
        den /= g;
        match (i64::try_from(num), i64::try_from(den)) {
            (Ok(num), Ok(den)) => Ok(Rational { num, den }),
            _ => Err(RationalError::Overflow),
        }
    }

    pub fn numer(&self) -> i64 {
        self.num
    }

    pub fn denom(&self) -> i64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_negative(&self) -> bool {
        self.num < 0
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn checked_add(self, rhs: Self) -> Option<Self> {
        let num = self.num as i128 * rhs.den as i128 + rhs.num as i128 * self.den as i128;
        let den = self.den as i128 * rhs.den as i128;
        Self::from_i128(num, den).ok()
    }

    pub fn checked_sub(self, rhs: Self) -> Option<Self> {
        self.checked_add(-rhs)
    }

    pub fn checked_mul(self, rhs: Self) -> Option<Self> {
        // cross-reduce first so that products of lowest-terms fractions stay small
        let g1 = gcd(self.num.unsigned_abs() as u128, rhs.den as u128).max(1) as i128;
        let g2 = gcd(rhs.num.unsigned_abs() as u128, self.den as u128).max(1) as i128;
        let num = (self.num as i128 / g1) * (rhs.num as i128 / g2);
        let den = (self.den as i128 / g2) * (rhs.den as i128 / g1);
        Self::from_i128(num, den).ok()
    }

    pub fn checked_div(self, rhs: Self) -> Option<Self> {
        if rhs.num == 0 {
            return None;
        }
        let recip = Rational::from_i128(rhs.den as i128, rhs.num as i128).ok()?;
        self.checked_mul(recip)
    }

    /// Exact sum of a sequence, `None` on overflow.
    pub fn checked_sum<I: IntoIterator<Item = Rational>>(iter: I) -> Option<Self> {
        iter.into_iter()
            .try_fold(Rational::ZERO, |acc, x| acc.checked_add(x))
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational {
            num: -self.num,
            den: self.den,
        }
    }
}

macro_rules! panicking_op {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                self.$checked(rhs)
                    .unwrap_or_else(|| panic!("rational overflow in {} {} {}", self, stringify!($method), rhs))
            }
        }
    };
}

panicking_op!(Add, add, checked_add);
panicking_op!(Sub, sub, checked_sub);
panicking_op!(Mul, mul, checked_mul);
panicking_op!(Div, div, checked_div);

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = RationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RationalError::Parse(s.to_string());
        let t = s.trim();
        match t.split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.trim().parse().map_err(|_| bad())?;
                let d: i64 = d.trim().parse().map_err(|_| bad())?;
                Rational::new(n, d)
            }
            None => Ok(Rational::integer(t.parse().map_err(|_| bad())?)),
        }
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::integer(n)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
