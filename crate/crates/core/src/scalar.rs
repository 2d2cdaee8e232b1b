use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use ndarray::NdFloat;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point element type shared by every numerical routine in the crate.
///
/// Implemented for `f32` and `f64`. The `Display` impl of both is the shortest
/// decimal string that parses back to the same value, which the CSV writer
/// relies on for exact round trips.
pub trait Scalar:
    NdFloat + FromPrimitive + ToPrimitive + FromStr + Sum + Default + Debug + Display
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count into `Self`.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
