//! Scalar abstraction. Everything in the crate is generic over a real
//! floating-point type; `f64` and `f32` are the intended instantiations.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable for all toolkit math.
///
/// Blanket-implemented for any type with the required numeric traits, so it
/// never needs to be implemented by hand.
pub trait Real: RealField + FromPrimitive + ToPrimitive + Copy {}

impl<T: RealField + FromPrimitive + ToPrimitive + Copy> Real for T {}

/// Converts an `f64` constant, typically a tolerance, into the working scalar.
pub(crate) fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant must be representable in the scalar type")
}
