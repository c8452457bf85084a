//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the scoring math is written against: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + Debug + Display + Default + Send + Sync + Serialize + DeserializeOwned + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot represent finite `f64`s.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal representable in scalar type")
    }

    /// Absolute slack used when checking that a mass triple sums to one.
    fn mass_tolerance() -> Self {
        Self::lit(1e-9).max(Self::epsilon() * Self::lit(16.0))
    }

    fn half() -> Self {
        Self::lit(0.5)
    }

    /// Total order for finite values; NaN compares equal to everything.
    fn order(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).unwrap_or(std::cmp::Ordering::Equal)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
