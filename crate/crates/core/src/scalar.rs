//! Scalar abstractions shared by the generic numerical kernels.
//!
//! Tensor algebra, polynomials and interpolation only need field operations,
//! so they run over [`Scalar`], which covers `f32`, `f64` and the exact
//! [`Rational`] type. Anything that takes square roots or powers (path
//! rescaling, partitions) asks for [`Real`].

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, Num, Signed};

/// Exact rational scalar used for the Brownian moment table and exact checks.
pub type Rational = Ratio<i128>;

pub trait Scalar: Num + Clone + Debug + PartialOrd + Send + Sync + 'static {
    fn from_i64(v: i64) -> Self;

    fn from_rational(r: &Rational) -> Self;

    fn to_f64(&self) -> f64;

    /// Relative rounding error of one operation; zero for exact types.
    fn unit_roundoff() -> f64;

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            Self::zero() - self.clone()
        } else {
            self.clone()
        }
    }
}

/// Floating-point scalar.
pub trait Real: Scalar + Float {
    fn from_f64(v: f64) -> Self;

    fn epsilon_val() -> Self {
        <Self as Float>::epsilon()
    }
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_rational(r: &Rational) -> Self {
        *r.numer() as f64 / *r.denom() as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn unit_roundoff() -> f64 {
        f64::EPSILON
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
}

impl Scalar for f32 {
    fn from_i64(v: i64) -> Self {
        v as f32
    }

    fn from_rational(r: &Rational) -> Self {
        (*r.numer() as f64 / *r.denom() as f64) as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn unit_roundoff() -> f64 {
        f32::EPSILON as f64
    }
}

impl Real for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for Rational {
    fn from_i64(v: i64) -> Self {
        Ratio::from_integer(v as i128)
    }

    fn from_rational(r: &Rational) -> Self {
        *r
    }

    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }

    fn unit_roundoff() -> f64 {
        0.0
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }
}

/// `1 / n!` in the target scalar.
pub(crate) fn inv_factorial<S: Scalar>(n: usize) -> S {
    let mut acc = S::one();
    for k in 2..=n {
        acc = acc / S::from_i64(k as i64);
    }
    acc
}
