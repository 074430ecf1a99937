//! Scalar abstraction for policy weights and rewards.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real number type used for policy weights, softmax probabilities and rewards.
///
/// Resources (CPU cores, Gbps) are always integers; only the learned and
/// derived quantities are real-valued, so the searches are generic over this
/// trait and instantiated with `f64` (default) or `f32`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossless-enough conversion from `f64` literals.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal representable")
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        Self::lit(num as f64) / Self::lit(den as f64)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_conversion() {
        assert_eq!(<f64 as Real>::from_ratio(36, 38), 36.0 / 38.0);
        assert_eq!(<f32 as Real>::from_ratio(1, 4), 0.25f32);
    }
}
