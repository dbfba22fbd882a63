//! Scalar abstraction shared by the analytic modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating point type the closed-form game analysis is evaluated in.
pub trait Scalar:
    Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_count(n: u32) -> Self {
        Self::from_u32(n).expect("count representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `true` when `x` lies in the closed unit interval.
pub(crate) fn is_probability<T: Scalar>(x: T) -> bool {
    x >= T::zero() && x <= T::one()
}
