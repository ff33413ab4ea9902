//! Numeric backends.
//!
//! Every algorithm in this crate is generic over [`Scalar`]. Two backends are
//! provided: [`Rational`] (arbitrary-precision, lossless) and `f64`. The
//! backend is picked by the caller per computation; certificates use
//! `Rational`, inner optimization loops use `f64`.

use alloc::string::String;
use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Exact rational number with arbitrary-precision numerator and denominator.
pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
{
    /// `true` for the lossless backend. Tolerances are ignored when set.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(v: i64) -> Self;
    /// `num / den`; panics on a zero denominator.
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_rational(r: &Rational) -> Self;
    /// Exact binary value of `x` for the rational backend.
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact value; floats convert to their binary expansion.
    fn to_rational(&self) -> Rational;
    fn is_zero(&self) -> bool;
    fn abs(&self) -> Self;

    fn from_usize(v: usize) -> Self {
        Self::from_int(v as i64)
    }

    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    fn recip(&self) -> Self {
        Self::one() / self
    }

    fn pow(&self, mut exp: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * &base;
            }
            exp >>= 1;
            if exp > 0 {
                base = base.clone() * &base;
            }
        }
        acc
    }

    /// `|self - other| <= tol`, or exact equality for the rational backend.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if Self::EXACT {
            self == other
        } else {
            (self.clone() - other).abs().to_f64() <= tol
        }
    }

    /// `self <= other + tol`, or exact `<=` for the rational backend.
    fn approx_le(&self, other: &Self, tol: f64) -> bool {
        if Self::EXACT {
            self <= other
        } else {
            self.to_f64() <= other.to_f64() + tol
        }
    }

    /// Pivot test used by elimination: exact zero, or below `1e-14 * scale`.
    fn is_negligible(&self, scale: &Self) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.abs().to_f64() <= 1e-14 * scale.abs().to_f64()
        }
    }

    /// Lossless `p/q` form when exact.
    fn to_rational_string(&self) -> Option<String>;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }
    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_rational(&self) -> Rational {
        <Rational as FromPrimitive>::from_f64(*self).expect("finite float")
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn abs(&self) -> Self {
        if *self < 0.0 {
            -*self
        } else {
            *self
        }
    }
    fn to_rational_string(&self) -> Option<String> {
        None
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_int(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn from_f64(x: f64) -> Self {
        <Rational as FromPrimitive>::from_f64(x).expect("finite float")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn to_rational(&self) -> Rational {
        self.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn to_rational_string(&self) -> Option<String> {
        Some(rational_string(self))
    }
}

/// Canonical `p/q` rendering (`q > 0`, reduced), including integers (`3/1`).
pub fn rational_string(r: &Rational) -> String {
    alloc::format!("{}/{}", r.numer(), r.denom())
}

/// Relative closeness with a scale floor: `|a - b| <= rel * max(|a|, |b|, floor)`.
pub fn rel_close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(floor);
    (a - b).abs() <= rel * scale
}

/// Relative error `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_error(a: f64, b: f64, floor: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(floor);
    (a - b).abs() / scale
}

#[cfg(test)]
mod tests {
    use super::{rational_string, Rational, Scalar};

    #[test]
    fn rational_ops_are_lossless() {
        let third = Rational::from_ratio(1, 3);
        let sum = third.clone() + &third + &third;
        assert_eq!(sum, Rational::one());
        assert_eq!(rational_string(&Rational::from_ratio(6, -4)), "-3/2");
        assert_eq!(rational_string(&Rational::from_int(3)), "3/1");
    }

    #[test]
    fn pow_by_squaring() {
        assert_eq!(Rational::from_ratio(2, 3).pow(5), Rational::from_ratio(32, 243));
        assert_eq!(3.0f64.pow(0), 1.0);
        assert_eq!(2.0f64.pow(10), 1024.0);
    }

    #[test]
    fn tolerance_ignored_for_exact() {
        let a = Rational::from_ratio(1, 1_000_000_000);
        assert!(!a.approx_eq(&Rational::zero(), 1.0));
        assert!(1e-13f64.approx_eq(&0.0, 1e-12));
        assert!(!a.is_negligible(&Rational::one()));
        assert!(1e-16f64.is_negligible(&1.0));
    }

    #[test]
    fn float_to_rational_is_exact_binary() {
        let r = Rational::from_f64(0.5);
        assert_eq!(r, Rational::from_ratio(1, 2));
        assert_eq!(Rational::from_ratio(729, 1_000_000_000).to_f64(), 7.29e-7);
    }
}
