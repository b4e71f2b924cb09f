//! Scalar abstraction: all numeric code in this crate is generic over a
//! floating-point type implementing [`Real`] (`f32` or `f64`).

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the crate.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + std::fmt::Debug + std::fmt::Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64` (total for `f32`/`f64`).
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to Real")
    }

    /// Conversion to `f64` for reporting and serialization.
    fn to64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
