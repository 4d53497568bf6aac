use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating point scalar used by the statistical routines: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumCast + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from a count or minute value.
    fn of(v: impl ToPrimitive) -> Self {
        <Self as NumCast>::from(v).expect("value representable as a float")
    }

    fn hundred() -> Self {
        Self::of(100u8)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
