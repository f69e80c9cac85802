//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

/// Ordered field used for breakpoints, weights and evaluation.
///
/// Implemented for `f32`, `f64` and [`BigRational`]. Exact types report a zero
/// tolerance so that every comparison is decided exactly.
pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// Converts a double; exact for rationals.
    fn lit(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn floor(&self) -> Self;
    fn round(&self) -> Self;
    /// Absolute tolerance used to snap digit computations onto cell boundaries.
    fn snap_eps() -> Self;
    /// Relative tolerance for merging nearly coincident breakpoints.
    fn merge_eps() -> Self;
    fn is_exact() -> bool;

    fn int(k: i64) -> Self {
        Self::lit(k as f64)
    }

    fn ratio(num: i64, den: i64) -> Self {
        Self::int(num) / Self::int(den)
    }

    fn usize(k: usize) -> Self {
        Self::int(k as i64)
    }

    fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self.clone();
        }
        acc
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn relu(self) -> Self {
        if self > Self::zero() {
            self
        } else {
            Self::zero()
        }
    }

    /// `|a - b| <= merge_eps * max(1, |a|, |b|)`.
    fn near(a: &Self, b: &Self) -> bool {
        let scale = Self::max_of(Self::one(), Self::max_of(a.abs(), b.abs()));
        (a.clone() - b.clone()).abs() <= Self::merge_eps() * scale
    }
}

impl Scalar for f64 {
    fn lit(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn floor(&self) -> Self {
        f64::floor(*self)
    }
    fn round(&self) -> Self {
        f64::round(*self)
    }
    fn snap_eps() -> Self {
        1e-12
    }
    fn merge_eps() -> Self {
        1e-13
    }
    fn is_exact() -> bool {
        false
    }
    fn int(k: i64) -> Self {
        k as f64
    }
    fn powi(&self, n: u32) -> Self {
        f64::powi(*self, n as i32)
    }
}

impl Scalar for f32 {
    fn lit(v: f64) -> Self {
        v as f32
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn floor(&self) -> Self {
        f32::floor(*self)
    }
    fn round(&self) -> Self {
        f32::round(*self)
    }
    fn snap_eps() -> Self {
        1e-5
    }
    fn merge_eps() -> Self {
        1e-6
    }
    fn is_exact() -> bool {
        false
    }
}

impl Scalar for BigRational {
    fn lit(v: f64) -> Self {
        BigRational::from_float(v).expect("finite literal")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn floor(&self) -> Self {
        num_rational::Ratio::floor(self)
    }
    fn round(&self) -> Self {
        num_rational::Ratio::round(self)
    }
    fn snap_eps() -> Self {
        Self::zero()
    }
    fn merge_eps() -> Self {
        Self::zero()
    }
    fn is_exact() -> bool {
        true
    }
    fn int(k: i64) -> Self {
        BigRational::from_integer(BigInt::from(k))
    }
    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

/// Converts between scalar types, exactly when both sides are exact.
pub fn cast<S: Scalar, T: Scalar>(v: &S) -> T {
    if S::is_exact() && T::is_exact() {
        if let Ok(r) = T::from_str_radix(&v.to_string(), 10) {
            return r;
        }
    }
    T::lit(v.to_f64())
}
