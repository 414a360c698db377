//! Scalar abstraction shared by the probability tables and matching weights.
//!
//! Channel tables are written once against [`Scalar`] so that they can be
//! evaluated in `f32`, `f64`, or exactly in rationals. Anything that needs a
//! logarithm (edge weights) asks for [`num_traits::Float`] on top.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

pub trait Scalar: Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static {
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("integer fits in scalar")
    }

    /// One half, the depolarizing value of the bias parameter.
    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
impl Scalar for Ratio<i64> {}
impl Scalar for Ratio<i128> {}
