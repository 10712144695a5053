//! Scalar abstractions shared by the chain and forward-algorithm code.
//!
//! The closed-form chain formulas only need field arithmetic, so they accept
//! any [`Scalar`] (including exact rationals). Anything that needs `π`,
//! logarithms or IEEE rounding asks for [`Real`].

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, Num};

/// Field-like scalar: `f32`, `f64`, or an exact rational such as [`crate::Exact`].
pub trait Scalar: Num + FromPrimitive + Clone + PartialOrd + Debug {}

impl<T> Scalar for T where T: Num + FromPrimitive + Clone + PartialOrd + Debug {}

/// Floating point scalar (`f32` or `f64`).
pub trait Real: Scalar + Float + FloatConst + Copy + Send + Sync + 'static {
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize always converts to a float")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Real> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }

    pub fn add(&mut self, value: T) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation = self.compensation + ((self.sum - t) + value);
        } else {
            self.compensation = self.compensation + ((value - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn total(&self) -> T {
        self.sum + self.compensation
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(values: I) -> T {
    values.into_iter().collect::<CompensatedSum<T>>().total()
}
