//! Coefficient fields: double precision and exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Exact rational scalar.
pub type Rational = BigRational;

/// Field operations needed by forms and dense linear algebra.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    /// Whether arithmetic is exact.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn to_f64(&self) -> f64;

    /// Magnitude used for pivot selection.
    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }

    /// Treat as zero relative to `scale`. Exact types only accept true zero.
    fn negligible(&self, scale: f64) -> bool;

    /// Positive real n-th root, if representable.
    fn nth_root(&self, n: u32) -> Option<Self>;

    fn signum_i32(&self) -> i32;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn negligible(&self, scale: f64) -> bool {
        self.abs() <= 1e-11 * scale.max(1e-300)
    }

    fn nth_root(&self, n: u32) -> Option<Self> {
        if *self < 0.0 {
            return None;
        }
        Some(self.powf(1.0 / n as f64))
    }

    fn signum_i32(&self) -> i32 {
        if *self > 0.0 {
            1
        } else if *self < 0.0 {
            -1
        } else {
            0
        }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn negligible(&self, _scale: f64) -> bool {
        self.is_zero()
    }

    fn nth_root(&self, n: u32) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let num = self.numer().nth_root(n);
        let den = self.denom().nth_root(n);
        if num.pow(n) == *self.numer() && den.pow(n) == *self.denom() {
            Some(BigRational::new(num, den))
        } else {
            None
        }
    }

    fn signum_i32(&self) -> i32 {
        if self.is_positive() {
            1
        } else if self.is_negative() {
            -1
        } else {
            0
        }
    }
}

/// Rational from an integer pair.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::from_ratio(num, den)
}
