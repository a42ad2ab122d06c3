use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, Num};

/// Arithmetic needed by the KNN recursion and exact Shapley enumeration.
///
/// Implemented for `f32`, `f64` and the `Ratio<i64>` / `Ratio<i128>`
/// rationals. None of the routines that take a `Scalar` need a square root.
pub trait Scalar: Num + Copy + PartialOrd + Debug + Send + Sync + 'static {
    fn from_count(n: usize) -> Self;

    /// False for NaN-like values that break total ordering.
    fn is_valid(&self) -> bool {
        self.partial_cmp(self).is_some()
    }
}

/// Floating point scalar: everything that needs norms or square roots.
pub trait Real: Scalar + Float {}

impl Scalar for f32 {
    fn from_count(n: usize) -> Self {
        n as f32
    }
}

impl Scalar for f64 {
    fn from_count(n: usize) -> Self {
        n as f64
    }
}

impl Real for f32 {}
impl Real for f64 {}

impl Scalar for Ratio<i64> {
    fn from_count(n: usize) -> Self {
        Ratio::from_integer(i64::try_from(n).expect("count exceeds i64"))
    }
}

impl Scalar for Ratio<i128> {
    fn from_count(n: usize) -> Self {
        Ratio::from_integer(n as i128)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_is_invalid() {
        assert!(!f64::NAN.is_valid());
        assert!(1.0f64.is_valid());
        assert!(Ratio::<i64>::new(1, 3).is_valid());
    }

    #[test]
    fn counts_convert() {
        assert_eq!(<f32 as Scalar>::from_count(7), 7.0);
        assert_eq!(<Ratio<i64> as Scalar>::from_count(7), Ratio::from_integer(7));
    }
}
