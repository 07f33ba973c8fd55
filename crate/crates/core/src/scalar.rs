//! Scalar abstraction so the numerical core works with `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar usable throughout the crate.
///
/// Blanket-implemented for anything satisfying the bounds, in particular
/// `f32` and `f64`. The accuracy contracts of the special functions and of
/// the correction factors are stated for `f64`; with `f32` everything runs
/// but accuracy is bounded by the wider machine epsilon.
pub trait Scalar:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lift an `f64` constant into this scalar type.
    #[inline]
    fn real(value: f64) -> Self {
        Self::from_f64(value).expect("constant representable in scalar type")
    }

    /// Lift a count into this scalar type.
    #[inline]
    fn from_count(value: usize) -> Self {
        Self::from_usize(value).expect("count representable in scalar type")
    }

    /// `self * self`.
    #[inline]
    fn sq(self) -> Self {
        self * self
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum<T>
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}
