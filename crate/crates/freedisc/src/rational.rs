//! Exact rational scalars and the small numeric-field abstraction that lets the
//! polynomial and linear-solve code run identically over `f64` and `BigRational`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub type Rational = BigRational;

/// Field operations needed by the exact/float dual-path code.
///
/// Implementations exist for `f64` (fast path) and `BigRational` (exact path).
/// `to_f64` is lossy for rationals; exact consumers must stay in `Rational`.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_int(i: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs_val(&self) -> Self;
    /// Multiplicative inverse; caller guarantees nonzero.
    fn recip_val(&self) -> Self {
        Self::one() / self.clone()
    }
}

impl Scalar for f64 {
    fn from_int(i: i64) -> Self {
        i as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
}

impl Scalar for BigRational {
    fn from_int(i: i64) -> Self {
        BigRational::from_integer(BigInt::from(i))
    }
    fn to_f64(&self) -> f64 {
        // Scale into i128 range first so huge numerators keep full f64 precision.
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            let n = self.numer().to_f64().unwrap_or(f64::INFINITY);
            let d = self.denom().to_f64().unwrap_or(f64::INFINITY);
            n / d
        })
    }
    fn abs_val(&self) -> Self {
        Signed::abs(self)
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn factorial(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= BigInt::from(i);
    }
    acc
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `base^exp` for integer `exp` of either sign.
pub fn rat_pow(base: &Rational, exp: i64) -> Rational {
    if exp >= 0 {
        num_traits::pow::pow(base.clone(), exp as usize)
    } else {
        num_traits::pow::pow(base.recip_val(), (-exp) as usize)
    }
}

/// Render as "num/den" (always with a denominator, so "12" prints as "12/1").
pub fn rat_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_and_binomial() {
        assert_eq!(factorial(0), BigInt::from(1));
        assert_eq!(factorial(5), BigInt::from(120));
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(7, 0), BigInt::from(1));
        assert_eq!(binomial(3, 5), BigInt::from(0));
    }

    #[test]
    fn pow_negative_exponent() {
        assert_eq!(rat_pow(&rat(2, 3), -2), rat(9, 4));
        assert_eq!(rat_pow(&rat(5, 1), 0), rat_int(1));
    }

    #[test]
    fn rational_to_f64_roundtrip() {
        // Qualified: ToPrimitive::to_f64 is also in scope here.
        assert_eq!(Scalar::to_f64(&rat(1, 2)), 0.5);
        assert_eq!(Scalar::to_f64(&rat(-7, 8)), -0.875);
        // Large factorial ratio stays finite and accurate.
        let a = Rational::new(factorial(31) * factorial(30), factorial(15) * factorial(15));
        let f = Scalar::to_f64(&a);
        assert!(f.is_finite() && f > 0.0);
    }

    #[test]
    fn rat_string_keeps_denominator() {
        assert_eq!(rat_string(&rat_int(12)), "12/1");
        assert_eq!(rat_string(&rat(-3, 4)), "-3/4");
    }
}
