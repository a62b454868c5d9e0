//! Numeric bound for edge weights.
//!
//! Graph construction, bias handling and the multicut solvers only need
//! ring arithmetic plus a partial order, so they are written against
//! [`Scalar`] and work for `f32`, `f64` and exact rationals alike.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Edge-weight scalar: `f32`, `f64`, or an exact type such as `Ratio<i64>`.
pub trait Scalar:
    Num + Copy + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// False for NaN and infinities; exact types are always finite.
    fn is_finite_weight(&self) -> bool {
        self.to_f64().is_some_and(f64::is_finite)
    }

    fn is_positive_weight(&self) -> bool {
        *self > Self::zero()
    }
}

impl<T> Scalar for T where
    T: Num + Copy + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
}

/// Total order for weights already known to be finite.
pub(crate) fn cmp_weights<W: Scalar>(a: &W, b: &W) -> std::cmp::Ordering {
    a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal)
}
