//! Floating-point scalar abstraction shared by every numeric routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, NumCast, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// A real scalar the toolkit can compute with: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumCast
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from `f64`; literal constants go through here.
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 is representable in every Scalar")
    }

    fn of_usize(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("usize is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("Scalar converts to f64")
    }

    /// IEEE total order.
    fn total_cmp_scalar(a: &Self, b: &Self) -> std::cmp::Ordering;
}

impl Scalar for f32 {
    fn total_cmp_scalar(a: &Self, b: &Self) -> std::cmp::Ordering {
        a.total_cmp(b)
    }
}

impl Scalar for f64 {
    fn total_cmp_scalar(a: &Self, b: &Self) -> std::cmp::Ordering {
        a.total_cmp(b)
    }
}

/// Total order for scalars that are known to be finite.
pub(crate) fn cmp_total<T: Scalar>(a: &T, b: &T) -> std::cmp::Ordering {
    a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal)
}
