//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Never fails for the supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count or index.
    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `max(floor, factor * eps * |scale|)`, the tolerance a computation in
    /// this precision can actually reach.
    #[inline]
    fn reachable_tol(floor: f64, factor: f64, scale: Self) -> Self {
        let attainable = Self::lit(factor) * Self::epsilon() * scale.abs().max(Self::one());
        Self::lit(floor).max(attainable)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reachable_tol_respects_precision() {
        assert_eq!(f64::reachable_tol(1e-13, 8.0, 1.0), 1e-13);
        assert!(f32::reachable_tol(1e-13, 8.0, 1.0) > 1e-7);
    }
}
