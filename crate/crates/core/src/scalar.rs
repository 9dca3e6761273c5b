//! Scalar abstractions.
//!
//! Everything that only needs ordered-field arithmetic (interval scans,
//! binning, the Lipschitz LP, isotonic regression, decision risks) is written
//! against [`Scalar`], which is implemented for `f32`, `f64` and
//! [`BigRational`]. Code that needs transcendental functions (logistic fits,
//! concentration radii) uses [`Real`], implemented for the two float types.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, Num, Signed, ToPrimitive, Zero};

/// An ordered field element usable by the exact-arithmetic parts of the crate.
pub trait Scalar: Clone + PartialOrd + Num + Signed + Debug + Send + Sync + 'static {
    /// Converts an `f64`. Rational types convert exactly.
    fn lift(value: f64) -> Self;

    /// Nearest `f64`.
    fn lower(&self) -> f64;

    fn from_count(count: usize) -> Self;

    /// Sums a sequence. Float types use Neumaier compensated summation;
    /// exact types add directly.
    fn total<I: IntoIterator<Item = Self>>(iter: I) -> Self {
        iter.into_iter().fold(Self::zero(), |acc, x| acc + x)
    }

    /// `true` for floating point types, whose results carry rounding error.
    fn is_inexact() -> bool;

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

    /// Clamps into `[lo, hi]` (assumes `lo <= hi`).
    fn clamp_to(self, lo: &Self, hi: &Self) -> Self {
        if self < *lo {
            lo.clone()
        } else if self > *hi {
            hi.clone()
        } else {
            self
        }
    }
}

/// Floating point scalar with the transcendental functions needed by the
/// logistic fits and concentration bounds.
pub trait Real: Scalar + Float + FloatConst + Copy {}

impl Real for f32 {}
impl Real for f64 {}

fn neumaier<F: Float, I: IntoIterator<Item = F>>(iter: I) -> F {
    let mut sum = F::zero();
    let mut carry = F::zero();
    for x in iter {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry = carry + ((sum - t) + x);
        } else {
            carry = carry + ((x - t) + sum);
        }
        sum = t;
    }
    sum + carry
}

impl Scalar for f64 {
    fn lift(value: f64) -> Self {
        value
    }

    fn lower(&self) -> f64 {
        *self
    }

    fn from_count(count: usize) -> Self {
        count as f64
    }

    fn total<I: IntoIterator<Item = Self>>(iter: I) -> Self {
        neumaier(iter)
    }

    fn is_inexact() -> bool {
        true
    }
}

impl Scalar for f32 {
    fn lift(value: f64) -> Self {
        value as f32
    }

    fn lower(&self) -> f64 {
        f64::from(*self)
    }

    fn from_count(count: usize) -> Self {
        count as f32
    }

    fn total<I: IntoIterator<Item = Self>>(iter: I) -> Self {
        neumaier(iter)
    }

    fn is_inexact() -> bool {
        true
    }
}

impl Scalar for BigRational {
    /// Exact binary expansion of the float. Non-finite input maps to zero.
    fn lift(value: f64) -> Self {
        BigRational::from_float(value).unwrap_or_else(BigRational::zero)
    }

    fn lower(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_count(count: usize) -> Self {
        BigRational::from_integer(BigInt::from(count))
    }

    fn is_inexact() -> bool {
        false
    }
}

/// Builds the rational `num / den`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
