//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! The thresholding formulas need transcendental functions (`acos`, `cbrt`,
//! `asin`) from [`num_traits::Float`], while the matrix code needs
//! [`nalgebra::RealField`] for decompositions. Both traits expose methods with
//! the same names, so call sites use fully qualified `Float::sqrt(x)` syntax.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the solvers: `f32` or `f64`.
pub trait Real:
    RealField + Float + FromPrimitive + ToPrimitive + Copy + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `sgn` with `sgn(0) = 0`.
#[inline]
pub(crate) fn sign<T: Real>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}
